use std::io::{Read, Write};
use std::path::Path;

use crate::descriptor::{Descriptor, DESCRIPTOR_DIM};
use crate::detect::Keypoint;
use crate::{FeatureError, Result};

const MAGIC: &[u8; 4] = b"TFKP";

/// Binary keypoint+descriptor dump, little-endian: header {magic "TFKP",
/// count u32, dim u32 = 128}, then per keypoint {x f32, y f32, scale f32,
/// orientation f32, 128 x f32}. Coordinates are at input-image resolution.
pub fn write_keypoint_dump(path: &Path, keypoints: &[Keypoint], descriptors: &[Descriptor]) -> Result<()> {
    assert_eq!(keypoints.len(), descriptors.len());
    let mut buf = Vec::with_capacity(12 + keypoints.len() * (4 + DESCRIPTOR_DIM) * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(keypoints.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(DESCRIPTOR_DIM as u32).to_le_bytes());
    for (kp, desc) in keypoints.iter().zip(descriptors) {
        let (x, y) = kp.image_xy();
        for v in [x as f32, y as f32, kp.scale as f32, kp.orientation as f32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &desc.v {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Reads a dump back as flat `(x, y, scale, orientation)` records with
/// descriptors (octave structure is not preserved in the file).
pub fn read_keypoint_dump(path: &Path) -> Result<(Vec<[f32; 4]>, Vec<Descriptor>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(FeatureError::BadDump("bad magic"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if dim != DESCRIPTOR_DIM {
        return Err(FeatureError::BadDump("unexpected descriptor dimension"));
    }
    let record = (4 + dim) * 4;
    if bytes.len() != 12 + count * record {
        return Err(FeatureError::BadDump("truncated dump"));
    }
    let mut kps = Vec::with_capacity(count);
    let mut descs = Vec::with_capacity(count);
    let mut pos = 12;
    let mut read_f32 = |pos: &mut usize| {
        let v = f32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap());
        *pos += 4;
        v
    };
    for _ in 0..count {
        let rec = [read_f32(&mut pos), read_f32(&mut pos), read_f32(&mut pos), read_f32(&mut pos)];
        let v: Vec<f32> = (0..dim).map(|_| read_f32(&mut pos)).collect();
        kps.push(rec);
        descs.push(Descriptor { v });
    }
    Ok((kps, descs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kp.tfkp");
        let kps = vec![
            Keypoint { x: 4.5, y: 8.25, octave: 1, scale: 3.2, orientation: 0.7, interval: 1 },
        ];
        let descs = vec![Descriptor { v: (0..128).map(|i| i as f32 / 128.0).collect() }];
        write_keypoint_dump(&path, &kps, &descs).unwrap();
        let (recs, back) = read_keypoint_dump(&path).unwrap();
        assert_eq!(recs.len(), 1);
        // coordinates come back at image resolution (octave 1 => doubled)
        assert_eq!(recs[0][0], 9.0);
        assert_eq!(recs[0][1], 16.5);
        assert_eq!(back[0], descs[0]);
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tfkp");
        std::fs::write(&path, b"NOPE........").unwrap();
        assert!(matches!(read_keypoint_dump(&path), Err(FeatureError::BadDump(_))));
    }
}
