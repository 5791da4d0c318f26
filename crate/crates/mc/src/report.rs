use serde::{Deserialize, Serialize};

pub const DEFAULT_Z_MAX: f64 = 4.0;

/// A Monte Carlo estimate tested against its expected value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub statistic: String,
    #[serde(with = "nonfinite")]
    pub estimate: f64,
    #[serde(with = "nonfinite")]
    pub expected: f64,
    #[serde(with = "nonfinite")]
    pub std_error: f64,
    /// `(estimate - expected) / std_error`; with a zero standard error it is
    /// 0 on exact agreement and ±∞ otherwise.
    #[serde(with = "nonfinite")]
    pub z_score: f64,
    pub n_paths: usize,
    pub z_max: f64,
    pub pass: bool,
}

impl McReport {
    /// Sample mean of `values` tested against `expected`.
    pub fn from_samples(statistic: impl Into<String>, values: &[f64], expected: f64, z_max: f64) -> Self {
        let n = values.len();
        let (estimate, std_error) = mean_and_se(values);
        let z_score = z(estimate, expected, std_error);
        Self {
            statistic: statistic.into(),
            estimate,
            expected,
            std_error,
            z_score,
            n_paths: n,
            z_max,
            pass: z_score.abs() <= z_max,
        }
    }
}

fn z(estimate: f64, expected: f64, se: f64) -> f64 {
    if se > 0.0 {
        (estimate - expected) / se
    } else if estimate == expected {
        0.0
    } else {
        f64::INFINITY.copysign(estimate - expected)
    }
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean and standard error of the mean; NaN mean for an empty sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Serialises non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}
