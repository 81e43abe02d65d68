//! Integral image sums against a direct loop, and a PGM roundtrip.

use crowdlens::imgcore::{decode_pnm, encode_pnm, integral, to_gray};
use crowdlens::{GrayImage, Rect};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let img = GrayImage::from_fn(48, 32, |x, y| ((x * 7 + y * 13) % 256) as u8);
    let ii = integral(&img);
    let r = Rect::new(5, 3, 20, 11);
    let mut direct = 0u64;
    for y in r.y..r.y + r.h {
        for x in r.x..r.x + r.w {
            direct += img.get(x, y) as u64;
        }
    }
    println!("rect {r}: integral {} direct {direct}", ii.rect_sum(r)?);

    let bytes = encode_pnm(&img.clone().into());
    let back = to_gray(&decode_pnm(&bytes)?)?;
    println!("P5 roundtrip of {} bytes equal: {}", bytes.len(), back == img);
    Ok(())
}
