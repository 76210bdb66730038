use std::io::Write;
use std::path::Path;

/// Binary little-endian PLY writer for point clouds and triangle meshes.
///
/// Vertices are f32 x/y/z, optional uchar RGB; faces are uchar-count + u32
/// index lists. Output bytes are a pure function of the inputs.
pub struct PlyWriter {
    vertices: Vec<[f32; 3]>,
    colors: Option<Vec<[u8; 3]>>,
    faces: Vec<[u32; 3]>,
}

impl PlyWriter {
    pub fn new() -> Self {
        Self { vertices: Vec::new(), colors: None, faces: Vec::new() }
    }

    pub fn with_points(points: impl IntoIterator<Item = [f64; 3]>) -> Self {
        let mut w = Self::new();
        for p in points {
            w.vertices.push([p[0] as f32, p[1] as f32, p[2] as f32]);
        }
        w
    }

    pub fn push_vertex(&mut self, p: [f64; 3]) -> u32 {
        self.vertices.push([p[0] as f32, p[1] as f32, p[2] as f32]);
        (self.vertices.len() - 1) as u32
    }

    /// Attaches per-vertex colors (values in [0, 1]); length must match.
    pub fn set_colors(&mut self, colors: impl IntoIterator<Item = [f64; 3]>) {
        let c: Vec<[u8; 3]> = colors
            .into_iter()
            .map(|c| {
                let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                [q(c[0]), q(c[1]), q(c[2])]
            })
            .collect();
        assert_eq!(c.len(), self.vertices.len(), "one color per vertex");
        self.colors = Some(c);
    }

    pub fn push_face(&mut self, face: [u32; 3]) {
        self.faces.push(face);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
        out.extend_from_slice(format!("element vertex {}\n", self.vertices.len()).as_bytes());
        out.extend_from_slice(b"property float x\nproperty float y\nproperty float z\n");
        if self.colors.is_some() {
            out.extend_from_slice(b"property uchar red\nproperty uchar green\nproperty uchar blue\n");
        }
        if !self.faces.is_empty() {
            out.extend_from_slice(format!("element face {}\n", self.faces.len()).as_bytes());
            out.extend_from_slice(b"property list uchar uint vertex_indices\n");
        }
        out.extend_from_slice(b"end_header\n");
        for (i, v) in self.vertices.iter().enumerate() {
            for c in v {
                out.extend_from_slice(&c.to_le_bytes());
            }
            if let Some(colors) = &self.colors {
                out.extend_from_slice(&colors[i]);
            }
        }
        for f in &self.faces {
            out.push(3u8);
            for idx in f {
                out.extend_from_slice(&idx.to_le_bytes());
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())
    }
}

impl Default for PlyWriter {
    fn default() -> Self {
        Self::new()
    }
}

/// Reads vertices (and faces, when present) from PLY files produced by
/// [`PlyWriter`].
pub fn read_ply(path: &Path) -> std::io::Result<(Vec<[f64; 3]>, Vec<[u32; 3]>)> {
    let bytes = std::fs::read(path)?;
    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "no end_header"))?
        + 11;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "header not utf-8"))?;
    let mut n_vertices = 0usize;
    let mut n_faces = 0usize;
    let mut has_color = false;
    for line in header.lines() {
        if let Some(rest) = line.strip_prefix("element vertex ") {
            n_vertices = rest.trim().parse().unwrap_or(0);
        } else if let Some(rest) = line.strip_prefix("element face ") {
            n_faces = rest.trim().parse().unwrap_or(0);
        } else if line.starts_with("property uchar red") {
            has_color = true;
        }
    }
    let mut pos = header_end;
    let stride = 12 + if has_color { 3 } else { 0 };
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let f = |off: usize| f32::from_le_bytes(bytes[pos + off..pos + off + 4].try_into().unwrap()) as f64;
        vertices.push([f(0), f(4), f(8)]);
        pos += stride;
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let count = bytes[pos];
        pos += 1;
        if count != 3 {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "non-triangle face"));
        }
        let u = |off: usize| u32::from_le_bytes(bytes[pos + off..pos + off + 4].try_into().unwrap());
        faces.push([u(0), u(4), u(8)]);
        pos += 12;
    }
    Ok((vertices, faces))
}
