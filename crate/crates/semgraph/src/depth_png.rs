//! 16-bit single-channel PNG depth images.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use semgraph_core::geometry::DepthImage;

use crate::{Error, Result};

pub fn read_depth_png(path: &Path) -> Result<DepthImage> {
    let image_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| image_err(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(image_err(format!(
            "expected 16-bit grayscale, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width, info.height);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| image_err("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| image_err(e.to_string()))?;
    let raw = buf[..frame.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok(DepthImage::new(width, height, raw)?)
}

pub fn write_depth_png(path: &Path, depth: &DepthImage) -> Result<()> {
    let image_err = |e: png::EncodingError| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), depth.width(), depth.height());
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(image_err)?;
    let bytes: Vec<u8> = depth.raw().iter().flat_map(|d| d.to_be_bytes()).collect();
    writer.write_image_data(&bytes).map_err(image_err)?;
    writer.finish().map_err(image_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let raw: Vec<u16> = (0..12).map(|i| i * 5000 + 1).collect();
        let img = DepthImage::new(4, 3, raw).unwrap();
        write_depth_png(&path, &img).unwrap();
        assert_eq!(read_depth_png(&path).unwrap(), img);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_depth_png(Path::new("/nonexistent/d.png")),
            Err(Error::Io { .. })
        ));
    }
}
