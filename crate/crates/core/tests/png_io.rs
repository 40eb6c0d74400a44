use evolime_core::imaging::{load_png, save_png, Image};
use image::{ImageBuffer, Rgb, Rgba};

fn pattern(x: u32, y: u32) -> [u8; 3] {
    [(x * 37 % 256) as u8, (y * 91 % 256) as u8, ((x ^ y) * 13 % 256) as u8]
}

#[test]
fn rgba_input_matches_reference_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rgba.png");
    let buf = ImageBuffer::from_fn(23, 17, |x, y| {
        let [r, g, b] = pattern(x, y);
        Rgba([r, g, b, ((x + y) * 11 % 256) as u8])
    });
    buf.save(&path).unwrap();

    let ours = load_png(&path).unwrap();
    let reference = image::open(&path).unwrap().to_rgb8();
    assert_eq!((ours.width(), ours.height()), (23, 17));
    assert_eq!(ours.to_raw(), reference.into_raw());
}

#[test]
fn saved_png_decodes_identically_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.png");
    let img = Image::from_fn(31, 9, |x, y| pattern(x as u32, y as u32)).unwrap();
    save_png(&img, &path).unwrap();
    let reference: ImageBuffer<Rgb<u8>, Vec<u8>> = image::open(&path).unwrap().to_rgb8();
    assert_eq!(reference.into_raw(), img.to_raw());
}

#[test]
fn saving_twice_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::from_fn(40, 40, |x, y| pattern(x as u32, y as u32)).unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    save_png(&img, &a).unwrap();
    save_png(&img, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn grayscale_png_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gray.png");
    image::GrayImage::from_fn(4, 4, |x, _| image::Luma([x as u8])).save(&path).unwrap();
    assert!(load_png(&path).is_err());
}
