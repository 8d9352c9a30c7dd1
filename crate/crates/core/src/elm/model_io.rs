//! Plain-text model files.
//!
//! ```text
//! # vlc-elm model
//! format=1
//! variant=dense            (or circulant)
//! activation=sigmoid
//! seed=42
//! hidden=128
//! inputs=64
//! outputs=9                (0 for an untrained model)
//! normalizer=none          (or standardize, followed by the two vectors)
//! input_offset v_1 ... v_Nr
//! input_scale v_1 ... v_Nr
//! input_weights ...        (dense: L*Nr values, row-major)
//! generator ...            (circulant: L values)
//! biases b_1 ... b_L
//! output_weights ...       (L*Nt values, row-major)
//! ```
//!
//! Every float is written with 17 significant digits so a save/load round
//! trip is bit-exact.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{Activation, DenseLayer, Elm, HiddenLayer, Normalizer};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Serialisation of the input-weight part of a model.
pub trait LayerCodec: HiddenLayer + Sized {
    const VARIANT: &'static str;
    fn write_params(&self, out: &mut String);
    fn read_params(fields: &ModelFields, hidden: usize, inputs: usize) -> Result<Self>;
}

/// Parsed `key=value` scalars and `name values...` arrays of a model file.
#[derive(Debug, Default)]
pub struct ModelFields {
    scalars: HashMap<String, String>,
    arrays: HashMap<String, Vec<f64>>,
}

impl ModelFields {
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = Self::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let head = tokens.next().unwrap();
            if let Some((k, v)) = head.split_once('=') {
                fields.scalars.insert(k.to_string(), v.to_string());
            } else {
                let values = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("{head}: {t:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                fields.arrays.insert(head.to_string(), values);
            }
        }
        Ok(fields)
    }

    pub fn scalar(&self, key: &str) -> Result<&str> {
        self.scalars
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("missing field {key}")))
    }

    pub fn parse_scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.scalar(key)?
            .parse()
            .map_err(|e| Error::Parse(format!("{key}: {e}")))
    }

    pub fn array(&self, key: &str, len: usize) -> Result<&[f64]> {
        let v = self
            .arrays
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing array {key}")))?;
        if v.len() != len {
            return Err(Error::Parse(format!(
                "{key} has {} values, expected {len}",
                v.len()
            )));
        }
        Ok(v)
    }
}

pub(crate) fn write_array<'a>(
    out: &mut String,
    name: &str,
    values: impl IntoIterator<Item = &'a f64>,
) {
    out.push_str(name);
    for v in values {
        write!(out, " {v:.16e}").unwrap();
    }
    out.push('\n');
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl LayerCodec for DenseLayer {
    const VARIANT: &'static str = "dense";

    fn write_params(&self, out: &mut String) {
        write_array(out, "input_weights", &row_major(self.weights()));
    }

    fn read_params(fields: &ModelFields, hidden: usize, inputs: usize) -> Result<Self> {
        let w = fields.array("input_weights", hidden * inputs)?;
        DenseLayer::new(DMatrix::from_row_slice(hidden, inputs, w))
    }
}

impl<H: LayerCodec> Elm<H> {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# vlc-elm model\n");
        let outputs = self.output_weights().map_or(0, |b| b.ncols());
        writeln!(out, "format={FORMAT_VERSION}").unwrap();
        writeln!(out, "variant={}", H::VARIANT).unwrap();
        writeln!(out, "activation={}", self.activation().name()).unwrap();
        writeln!(out, "seed={}", self.seed()).unwrap();
        writeln!(out, "hidden={}", self.hidden_size()).unwrap();
        writeln!(out, "inputs={}", self.input_size()).unwrap();
        writeln!(out, "outputs={outputs}").unwrap();
        match self.normalizer() {
            None => out.push_str("normalizer=none\n"),
            Some(n) => {
                out.push_str("normalizer=standardize\n");
                write_array(&mut out, "input_offset", n.offset.iter());
                write_array(&mut out, "input_scale", n.scale.iter());
            }
        }
        self.layer().write_params(&mut out);
        write_array(&mut out, "biases", self.biases().iter());
        if let Some(b) = self.output_weights() {
            write_array(&mut out, "output_weights", &row_major(b));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let f = ModelFields::parse(text)?;
        let format: u32 = f.parse_scalar("format")?;
        if format != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported model format {format}")));
        }
        let variant = f.scalar("variant")?;
        if variant != H::VARIANT {
            return Err(Error::Parse(format!(
                "model variant {variant:?}, expected {:?}",
                H::VARIANT
            )));
        }
        let activation = Activation::from_name(f.scalar("activation")?)?;
        let seed: u64 = f.parse_scalar("seed")?;
        let hidden: usize = f.parse_scalar("hidden")?;
        let inputs: usize = f.parse_scalar("inputs")?;
        let outputs: usize = f.parse_scalar("outputs")?;

        let layer = H::read_params(&f, hidden, inputs)?;
        let biases = DVector::from_column_slice(f.array("biases", hidden)?);
        let mut model = Elm::from_parts(layer, biases, activation, seed)?;
        match f.scalar("normalizer")? {
            "none" => {}
            "standardize" => model.set_normalizer(Some(Normalizer {
                offset: DVector::from_column_slice(f.array("input_offset", inputs)?),
                scale: DVector::from_column_slice(f.array("input_scale", inputs)?),
            }))?,
            other => return Err(Error::Parse(format!("unknown normalizer {other:?}"))),
        }
        if outputs > 0 {
            let b = f.array("output_weights", hidden * outputs)?;
            model.set_output_weights(DMatrix::from_row_slice(hidden, outputs, b))?;
        }
        Ok(model)
    }
}
