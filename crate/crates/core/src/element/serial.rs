use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Element, GridData};
use crate::error::{QhmError, Result};
use crate::params::{ModelParams, Truncation};

/// On-disk form of a grid element; `data` is indexed `[p + P][ix][iy]` as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementFile {
    pub c: i64,
    pub hbar: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(rename = "P")]
    pub p_max: usize,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    /// Representation band; defaults to `max(4P, 2)` when absent.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<usize>,
    pub data: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ElementFile {
    pub fn from_element(el: &Element) -> ElementFile {
        let params = el.params();
        let trunc = el.trunc();
        let grid = el.grid_values();
        let pm = trunc.p_max as i64;
        let data = (-pm..=pm)
            .map(|p| {
                (0..trunc.nx)
                    .map(|ix| {
                        (0..trunc.ny)
                            .map(|iy| {
                                let z = grid.get(p, ix, iy);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ElementFile {
            c: params.c,
            hbar: params.hbar,
            mu: params.mu,
            nu: params.nu,
            p_max: trunc.p_max,
            nx: trunc.nx,
            ny: trunc.ny,
            q_max: Some(trunc.q_max),
            data,
        }
    }

    pub fn into_element(self) -> Result<Element> {
        let params = ModelParams::new(self.c, self.hbar, self.mu, self.nu)?;
        let q = self.q_max.unwrap_or((4 * self.p_max).max(2));
        let trunc = Truncation::new(self.p_max, self.nx, self.ny, q)?;
        if self.data.len() != 2 * self.p_max + 1
            || self.data.iter().any(|plane| {
                plane.len() != self.nx || plane.iter().any(|col| col.len() != self.ny)
            })
        {
            return Err(QhmError::Config(format!(
                "element data must have shape [{}][{}][{}]",
                2 * self.p_max + 1,
                self.nx,
                self.ny
            )));
        }
        let values: Vec<Complex64> = self
            .data
            .into_iter()
            .flatten()
            .flatten()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        let grid = GridData::new(trunc.nx, trunc.ny, trunc.p_max, values)?;
        Element::from_grid(params, trunc, grid)
    }
}

impl Element {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ElementFile::from_element(self))?)
    }

    pub fn from_json(s: &str) -> Result<Element> {
        serde_json::from_str::<ElementFile>(s)?.into_element()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Element> {
        Element::from_json(&std::fs::read_to_string(path)?)
    }
}
