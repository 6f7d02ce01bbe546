//! Metric fields on a mesh and the `.nmf` file format.
//!
//! Values are stored in the coordinate frame `∂1, ∂2, ∂3` at each fundamental-domain
//! vertex. Numerical work mostly happens in the left-invariant frame, where values at
//! identified points agree.

use std::io::Write;

use nalgebra::Matrix3;
use nil_core::{check_spd, coframe, coframe_inverse, LeftInvariantMetric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RoundingError};
use crate::mesh::MeshedNilmanifold;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub label: String,
    pub k: usize,
    pub n: [usize; 3],
    values: Vec<Matrix3<f64>>,
}

/// `J^T G J`, the coordinate matrix of an `X`-frame Gram matrix at first coordinate `x1`.
pub fn to_coordinate(g: &Matrix3<f64>, x1: f64) -> Matrix3<f64> {
    let j = coframe(x1);
    sym(&(j.transpose() * g * j))
}

pub fn to_frame(g: &Matrix3<f64>, x1: f64) -> Matrix3<f64> {
    let ji = coframe_inverse(x1);
    sym(&(ji.transpose() * g * ji))
}

pub(crate) fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

impl MetricField {
    pub fn new(mesh: &MeshedNilmanifold, values: Vec<Matrix3<f64>>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(RoundingError::Mismatch(format!("{} values for {} vertices", values.len(), mesh.num_vertices())));
        }
        if let Some(vertex) = values.iter().position(|g| check_spd(g).is_err()) {
            return Err(RoundingError::NotPositiveDefinite { vertex });
        }
        Ok(Self { label: mesh.label().to_string(), k: mesh.k(), n: mesh.resolution(), values: values.iter().map(sym).collect() })
    }

    /// Builds a field from left-invariant-frame values.
    pub fn from_frame_values(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>]) -> Result<Self> {
        let values = (0..mesh.num_vertices()).map(|v| to_coordinate(&frame[v], mesh.position(v)[0])).collect();
        Self::new(mesh, values)
    }

    /// Mesh this field lives on.
    pub fn mesh(&self) -> Result<MeshedNilmanifold> {
        MeshedNilmanifold::new(self.label.clone(), self.k, self.n)
    }

    pub fn check_mesh(&self, mesh: &MeshedNilmanifold) -> Result<()> {
        if self.k != mesh.k() || self.n != mesh.resolution() {
            return Err(RoundingError::Mismatch(format!(
                "field (k = {}, n = {:?}) on mesh (k = {}, n = {:?})",
                self.k,
                self.n,
                mesh.k(),
                mesh.resolution()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> &[Matrix3<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frame_values(&self, mesh: &MeshedNilmanifold) -> Vec<Matrix3<f64>> {
        (0..self.values.len()).into_par_iter().map(|v| to_frame(&self.values[v], mesh.position(v)[0])).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(RoundingError::InvalidArgument(format!("scale factor {c}")));
        }
        Ok(Self { values: self.values.iter().map(|g| g * c).collect(), ..self.clone() })
    }

    /// Mean of the left-invariant-frame values.
    pub fn frame_average(&self, mesh: &MeshedNilmanifold) -> Matrix3<f64> {
        let frame = self.frame_values(mesh);
        frame.iter().fold(Matrix3::zeros(), |acc, g| acc + g) / frame.len() as f64
    }

    /// Riemannian volume by the vertex rule.
    pub fn volume(&self, mesh: &MeshedNilmanifold) -> f64 {
        self.values.iter().map(|g| g.determinant().max(0.0).sqrt()).sum::<f64>() * mesh.cell_volume()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }

    /// Largest entry difference relative to the largest entry of `self`.
    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        let scale = self.values.iter().map(|g| g.amax()).fold(0.0, f64::max);
        self.max_abs_diff(other) / scale
    }

    fn header(&self, encoding: &str) -> Header {
        Header {
            lattice: self.label.clone(),
            k: self.k,
            n1: self.n[0],
            n2: self.n[1],
            n3: self.n[2],
            frame: "coordinate".into(),
            encoding: encoding.into(),
            values: None,
        }
    }

    /// Binary form: one JSON header line, then six little-endian `f64` per vertex.
    pub fn to_nmf_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(&self.header(BINARY))?;
        out.push(b'\n');
        for g in &self.values {
            for x in upper(g) {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(out)
    }

    pub fn to_nmf_json(&self) -> Result<String> {
        let mut h = self.header(JSON);
        h.values = Some(self.values.iter().map(upper).collect());
        Ok(serde_json::to_string(&h)?)
    }

    /// Reads either variant; the encoding is taken from the header.
    pub fn from_nmf_bytes(bytes: &[u8]) -> Result<Self> {
        let mut stream = serde_json::Deserializer::from_slice(bytes).into_iter::<Header>();
        let header = stream.next().ok_or_else(|| RoundingError::Format("missing header".into()))??;
        let offset = stream.byte_offset();
        if header.frame != "coordinate" {
            return Err(RoundingError::Format(format!("unsupported frame {:?}", header.frame)));
        }
        let n = [header.n1, header.n2, header.n3];
        let mesh = MeshedNilmanifold::new(header.lattice.clone(), header.k, n)?;
        let count = mesh.num_vertices();
        let rows: Vec<[f64; 6]> = match header.encoding.as_str() {
            JSON => header.values.clone().ok_or_else(|| RoundingError::Format("json variant without values".into()))?,
            BINARY => {
                let payload = bytes.get(offset..).unwrap_or(&[]);
                let payload = payload.strip_prefix(b"\n").unwrap_or(payload);
                if payload.len() != count * 48 {
                    return Err(RoundingError::Format(format!("payload has {} bytes, expected {}", payload.len(), count * 48)));
                }
                payload
                    .chunks_exact(48)
                    .map(|c| std::array::from_fn(|i| f64::from_le_bytes(c[8 * i..8 * i + 8].try_into().expect("8 bytes"))))
                    .collect()
            }
            other => return Err(RoundingError::Format(format!("unknown encoding {other:?}"))),
        };
        if rows.len() != count {
            return Err(RoundingError::Format(format!("{} rows for {count} vertices", rows.len())));
        }
        Self::new(&mesh, rows.iter().map(from_upper).collect())
    }
}

const BINARY: &str = "f64-le";
const JSON: &str = "json";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    lattice: String,
    k: usize,
    n1: usize,
    n2: usize,
    n3: usize,
    frame: String,
    encoding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<[f64; 6]>>,
}

fn upper(g: &Matrix3<f64>) -> [f64; 6] {
    [g[(0, 0)], g[(0, 1)], g[(0, 2)], g[(1, 1)], g[(1, 2)], g[(2, 2)]]
}

fn from_upper(r: &[f64; 6]) -> Matrix3<f64> {
    Matrix3::new(r[0], r[1], r[2], r[1], r[3], r[4], r[2], r[4], r[5])
}

/// Evaluates a left-invariant metric in coordinates at every vertex.
pub fn pullback_homogeneous(g: &LeftInvariantMetric, mesh: &MeshedNilmanifold) -> MetricField {
    let values = (0..mesh.num_vertices()).map(|v| to_coordinate(g.gram(), mesh.position(v)[0])).collect();
    MetricField::new(mesh, values).expect("a left-invariant metric is SPD everywhere")
}

/// Adds a smooth random symmetric perturbation of relative size `eps` in the left-invariant
/// frame. White noise is diffused over the mesh to correlation length about `length` (in
/// units of the first period), so it is compatible with the identifications.
pub fn perturbed(mesh: &MeshedNilmanifold, f: &MetricField, eps: f64, seed: u64, length: f64) -> Result<MetricField> {
    use rand::{Rng, SeedableRng};
    f.check_mesh(mesh)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<Matrix3<f64>> = (0..mesh.num_vertices())
        .map(|_| {
            let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            sym(&m)
        })
        .collect();
    let nbrs: Vec<[usize; 6]> = (0..mesh.num_vertices())
        .map(|v| std::array::from_fn(|s| if s < 3 { mesh.neighbor(v, s) } else { mesh.back_neighbor(v, s - 3) }))
        .collect();
    let sweeps = (4.0 * (length * mesh.resolution()[0] as f64).powi(2)).ceil() as usize;
    for _ in 0..sweeps {
        noise = (0..noise.len())
            .map(|v| (noise[v] * 2.0 + nbrs[v].iter().fold(Matrix3::zeros(), |acc, &w| acc + noise[w])) / 8.0)
            .collect();
    }
    let peak = noise.iter().map(|m| m.amax()).fold(0.0, f64::max);
    let frame = f.frame_values(mesh);
    let values: Vec<Matrix3<f64>> = frame.iter().zip(&noise).map(|(g, n)| g + n * (eps * g.amax() / peak)).collect();
    MetricField::from_frame_values(mesh, &values)
}
