use std::io::Write;
use std::path::Path;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::Vec3;

/// Reads an ASCII OBJ file of `v` and triangular `f` records.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text)
}

/// Parses OBJ text. Texture/normal references in faces (`1/2/3`) are ignored
/// and negative (relative) indices are resolved.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tok = content.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let s = tok.next().ok_or_else(|| Error::Parse {
                        line,
                        msg: "vertex needs three coordinates".into(),
                    })?;
                    *slot = s.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad coordinate `{s}`"),
                    })?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tok.collect();
                if refs.len() != 3 {
                    return Err(Error::NonTriangleFace { line, count: refs.len() });
                }
                let mut tri = [0usize; 3];
                for (slot, r) in tri.iter_mut().zip(refs) {
                    let idx = r.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad face index `{r}`"),
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(Error::IndexOutOfRange { triangle: triangles.len(), index: i });
                    }
                    *slot = resolved as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Writes vertices and faces as OBJ; when `u` is given it is emitted as the
/// texture coordinate of every vertex (`vt u 0`).
pub fn write_obj<W: Write>(
    mut w: W,
    vertices: &[Vec3],
    triangles: &[[usize; 3]],
    u: Option<&[f64]>,
) -> std::io::Result<()> {
    for p in vertices {
        writeln!(w, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    if let Some(u) = u {
        for x in u {
            writeln!(w, "vt {:.16e} 0", x)?;
        }
        for t in triangles {
            writeln!(w, "f {0}/{0} {1}/{1} {2}/{2}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    } else {
        for t in triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    }
    Ok(())
}
