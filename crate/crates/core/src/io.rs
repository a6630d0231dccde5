//! Binary PGM (P5) and PNG image I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{to_gray, GrayImage};

/// Encodes as binary PGM with maxval 255.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

/// Decodes binary PGM (P5, maxval 255). Header comments are allowed.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |m: &str| Error::InvalidInput(format!("pgm: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 is supported"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = w * h;
    if bytes.len() < pos + need {
        return Err(bad("truncated raster"));
    }
    GrayImage::new(w, h, bytes[pos..pos + need].to_vec())
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Loads a PGM or PNG (8-bit gray or RGBA) as grayscale, chosen by content.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(b"P5") {
        return decode_pgm(&bytes);
    }
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidInput(format!("png: {e}")))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            GrayImage::new(w as usize, h as usize, g.into_raw())
        }
        other => {
            let rgba = other.to_rgba8();
            let (w, h) = rgba.dimensions();
            to_gray(rgba.as_raw(), w as usize, h as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_bytes() {
        let img = GrayImage::new(2, 1, vec![7, 200]).unwrap();
        assert_eq!(encode_pgm(&img), b"P5\n2 1\n255\n\x07\xc8".to_vec());
    }

    #[test]
    fn header_comments_and_errors() {
        let img = decode_pgm(b"P5 # c\n# another\n1 2\n255\n\x01\x02").unwrap();
        assert_eq!(img.data(), &[1, 2]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = GrayImage::from_fn(9, 4, |x, y| (x * 20 + y) as u8);
        image::GrayImage::from_raw(9, 4, img.data().to_vec()).unwrap().save(&path).unwrap();
        assert_eq!(load_gray(&path).unwrap(), img);
        let pgm = dir.path().join("g.pgm");
        write_pgm(&pgm, &img).unwrap();
        assert_eq!(load_gray(&pgm).unwrap(), img);
    }

    proptest! {
        #[test]
        fn pgm_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u8>()) {
            let img = GrayImage::from_fn(w, h, |x, y| (x * 31 + y * 7) as u8 ^ seed);
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
