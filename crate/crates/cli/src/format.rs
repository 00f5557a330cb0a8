//! The kernel-spec file format: JSON-compatible structured text that
//! round-trips bit-exactly through `emit` after canonicalization.

use serde::{Deserialize, Serialize};

use doeblin::drift::{DriftCertificate, MinorizationCertificate};
use doeblin::space::StateSet;
use doeblin::{GeometricTail, Kernel64, Measure64, StateSpace, WeightFn};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelSpecFile {
    pub space: SpaceSpec,
    pub markov: bool,
    /// Sparse rows: one list of `[state, weight]` pairs per window state.
    pub rows: Vec<Vec<(usize, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificatesSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<MultiplierSpec>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Finite { size: usize },
    Windowed { x_max: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    /// Explicit values; omitted when `geometric_z` alone defines `z^x`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric_z: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificatesSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doeblin: Option<DoeblinSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minorization: Option<MinorizationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DoeblinSpec {
    pub ell: usize,
    pub eta: f64,
    pub rho: f64,
    pub nu: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub c: Vec<usize>,
    pub r1: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MinorizationSpec {
    pub c: Vec<usize>,
    pub b: f64,
    pub nu: Vec<(usize, f64)>,
    pub alpha: AlphaSpec,
}

/// Densities on `C x support(nu)`: the constant-one shorthand or an
/// explicit matrix.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaSpec {
    Shorthand(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    pub xi: Vec<f64>,
    pub t: f64,
}

impl KernelSpecFile {
    pub fn space(&self) -> StateSpace {
        match self.space {
            SpaceSpec::Finite { size } => StateSpace::finite(size),
            SpaceSpec::Windowed { x_max } => StateSpace::windowed(x_max),
        }
    }

    pub fn kernel(&self) -> Result<Kernel64, doeblin::Error> {
        let sp = self.space();
        let rows = self
            .rows
            .iter()
            .map(|r| Measure64::new(sp, r.clone(), 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        Kernel64::positive(sp, rows, self.markov)
    }

    pub fn weight_fn(&self) -> Result<Option<WeightFn<f64>>, doeblin::Error> {
        let sp = self.space();
        match &self.weight {
            None => Ok(None),
            Some(ws) => match (&ws.values, ws.geometric_z) {
                (Some(values), z) => Ok(Some(WeightFn::new(
                    sp,
                    values.clone(),
                    z.map(|ratio| GeometricTail { ratio }),
                )?)),
                (None, Some(z)) => Ok(Some(WeightFn::geometric(sp, z)?)),
                (None, None) => Err(doeblin::Error::Invalid(
                    "weight needs values or geometric_z".into(),
                )),
            },
        }
    }

    pub fn drift_certificate(&self) -> Result<Option<DriftCertificate<f64>>, doeblin::Error> {
        let Some(certs) = &self.certificates else {
            return Ok(None);
        };
        let Some(d) = &certs.drift else {
            return Ok(None);
        };
        let w = self.weight_fn()?.ok_or_else(|| {
            doeblin::Error::Invalid("a drift certificate needs the weight block".into())
        })?;
        let c = StateSet::new(self.space(), d.c.clone())?;
        Ok(Some(DriftCertificate::new(c, w, d.r1, d.eta)?))
    }

    pub fn minorization_certificate(
        &self,
    ) -> Result<Option<MinorizationCertificate<f64>>, doeblin::Error> {
        let Some(certs) = &self.certificates else {
            return Ok(None);
        };
        let Some(m) = &certs.minorization else {
            return Ok(None);
        };
        let sp = self.space();
        let c = StateSet::new(sp, m.c.clone())?;
        let nu = Measure64::new(sp, m.nu.clone(), 0.0)?;
        match &m.alpha {
            AlphaSpec::Shorthand(s) if s == "unit" => Ok(Some(
                MinorizationCertificate::with_unit_density(c, m.b, nu)?,
            )),
            AlphaSpec::Shorthand(s) => Err(doeblin::Error::Invalid(format!(
                "unknown alpha shorthand {s:?} (expected \"unit\")"
            ))),
            AlphaSpec::Rows(rows) => Ok(Some(MinorizationCertificate::new(
                c,
                m.b,
                nu,
                rows.clone(),
            )?)),
        }
    }

    pub fn doeblin_certificate(
        &self,
    ) -> Result<Option<doeblin::decompose::DoeblinCertificate<f64>>, doeblin::Error> {
        let Some(certs) = &self.certificates else {
            return Ok(None);
        };
        let Some(d) = &certs.doeblin else {
            return Ok(None);
        };
        let nu = Measure64::new(self.space(), d.nu.clone(), 0.0)?;
        Ok(Some(doeblin::decompose::DoeblinCertificate::new(
            d.ell, nu, d.eta, d.rho,
        )?))
    }

    /// Canonical emission: fixed field order, shortest-round-trip floats.
    pub fn emit(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("spec files serialize");
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Build the file view of a kernel (+ optional weight/certificates).
    pub fn from_parts(
        kernel: &Kernel64,
        weight: Option<&WeightFn<f64>>,
        drift: Option<&DriftCertificate<f64>>,
        minor: Option<&MinorizationCertificate<f64>>,
    ) -> Self {
        let space = match kernel.space() {
            StateSpace::Finite { n } => SpaceSpec::Finite { size: n },
            StateSpace::WindowedCountable { x_max } => SpaceSpec::Windowed { x_max },
        };
        let rows = kernel.rows().iter().map(|r| r.entries().to_vec()).collect();
        let weight_spec = weight.map(|w| WeightSpec {
            values: Some(w.values().to_vec()),
            geometric_z: w.tail_model().map(|t| t.ratio),
        });
        let drift_spec = drift.map(|d| DriftSpec {
            c: d.c().states().to_vec(),
            r1: d.r1(),
            eta: d.eta(),
        });
        let minor_spec = minor.map(|m| MinorizationSpec {
            c: m.c().states().to_vec(),
            b: m.b(),
            nu: m.nu().entries().to_vec(),
            alpha: if m
                .density()
                .alpha()
                .iter()
                .all(|row| row.iter().all(|&a| a == 1.0))
            {
                AlphaSpec::Shorthand("unit".into())
            } else {
                AlphaSpec::Rows(m.density().alpha().to_vec())
            },
        });
        let certificates = if drift_spec.is_some() || minor_spec.is_some() {
            Some(CertificatesSpec {
                doeblin: None,
                drift: drift_spec,
                minorization: minor_spec,
            })
        } else {
            None
        };
        KernelSpecFile {
            space,
            markov: kernel.is_markov(),
            rows,
            weight: weight_spec,
            certificates,
            multiplier: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::build_reflected_walk;

    #[test]
    fn round_trip_is_byte_identical() {
        let m = build_reflected_walk(0.3, 12).unwrap();
        let file =
            KernelSpecFile::from_parts(&m.kernel, Some(&m.w), Some(&m.drift), Some(&m.minor));
        let text = file.emit();
        let reparsed = KernelSpecFile::parse(&text).unwrap();
        assert_eq!(reparsed, file);
        assert_eq!(reparsed.emit(), text);
    }

    #[test]
    fn parse_error_carries_position() {
        let bad = "{\n  \"space\": { \"type\": \"finite\", \"size\": 2 },\n  \"markov\": tru\n}";
        let err = KernelSpecFile::parse(bad).unwrap_err();
        assert!(err.line() >= 3);
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = r#"{
  "space": { "type": "finite", "size": 2 },
  "markov": false,
  "rows": [[[0, 1.0]], [[1, 1.0]]],
  "surprise": 1
}"#;
        assert!(KernelSpecFile::parse(bad).is_err());
    }

    #[test]
    fn kernel_reconstruction() {
        let text = r#"{
  "space": { "type": "finite", "size": 2 },
  "markov": true,
  "rows": [[[0, 0.9], [1, 0.1]], [[0, 0.2], [1, 0.8]]]
}"#;
        let file = KernelSpecFile::parse(text).unwrap();
        let k = file.kernel().unwrap();
        assert_eq!(k.row(0).weight_at(0), 0.9);
        assert!(k.is_markov());
    }
}
