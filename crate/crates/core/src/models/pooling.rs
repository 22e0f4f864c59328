use std::fmt;
use std::str::FromStr;

/// Closed catalog of 1-Lipschitz, positively homogeneous scalar maps used by
/// general pooling `phi(mean(rho(z)))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarMap {
    Identity,
    Relu,
    Abs,
    /// `t -> -max(t, 0)`
    NegRelu,
}

impl ScalarMap {
    pub const ALL: [ScalarMap; 4] = [
        ScalarMap::Identity,
        ScalarMap::Relu,
        ScalarMap::Abs,
        ScalarMap::NegRelu,
    ];

    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            ScalarMap::Identity => t,
            ScalarMap::Relu => t.max(0.0),
            ScalarMap::Abs => t.abs(),
            ScalarMap::NegRelu => -t.max(0.0),
        }
    }

    /// Subgradient; kinks at zero take the value 0.
    #[inline]
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            ScalarMap::Identity => 1.0,
            ScalarMap::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarMap::Abs => {
                if t > 0.0 {
                    1.0
                } else if t < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            ScalarMap::NegRelu => {
                if t > 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ScalarMap::Identity => 0,
            ScalarMap::Relu => 1,
            ScalarMap::Abs => 2,
            ScalarMap::NegRelu => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarMap::Identity => "identity",
            ScalarMap::Relu => "relu",
            ScalarMap::Abs => "abs",
            ScalarMap::NegRelu => "negrelu",
        }
    }
}

impl FromStr for ScalarMap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown scalar map {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pooling {
    Average,
    Max,
    General { rho: ScalarMap, phi: ScalarMap },
}

impl Pooling {
    /// Pools a nonempty vector to a scalar.
    pub fn pool(self, z: &[f64]) -> f64 {
        debug_assert!(!z.is_empty());
        let n = z.len() as f64;
        match self {
            Pooling::Average => z.iter().sum::<f64>() / n,
            Pooling::Max => z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Pooling::General { rho, phi } => {
                phi.apply(z.iter().map(|&t| rho.apply(t)).sum::<f64>() / n)
            }
        }
    }

    /// Writes `dP/dz` into `out`. Max pooling routes the whole gradient to
    /// the lowest-index maximizer.
    pub fn backward(self, z: &[f64], out: &mut [f64]) {
        let n = z.len() as f64;
        match self {
            Pooling::Average => out.iter_mut().for_each(|o| *o = 1.0 / n),
            Pooling::Max => {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[argmax(z)] = 1.0;
            }
            Pooling::General { rho, phi } => {
                let mean = z.iter().map(|&t| rho.apply(t)).sum::<f64>() / n;
                let outer = phi.derivative(mean) / n;
                for (o, &t) in out.iter_mut().zip(z) {
                    *o = outer * rho.derivative(t);
                }
            }
        }
    }

    pub fn catalog() -> Vec<Pooling> {
        let mut all = vec![Pooling::Average, Pooling::Max];
        for rho in ScalarMap::ALL {
            for phi in ScalarMap::ALL {
                all.push(Pooling::General { rho, phi });
            }
        }
        all
    }
}

/// Index of the first maximum.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pooling::Average => f.write_str("avg"),
            Pooling::Max => f.write_str("max"),
            Pooling::General { rho, phi } => write!(f, "general:{}:{}", rho.name(), phi.name()),
        }
    }
}

impl FromStr for Pooling {
    type Err = String;

    /// `avg`, `max`, or `general:<rho>:<phi>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avg" | "average" => Ok(Pooling::Average),
            "max" => Ok(Pooling::Max),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["general", rho, phi] => Ok(Pooling::General {
                        rho: rho.parse()?,
                        phi: phi.parse()?,
                    }),
                    _ => Err(format!("unknown pooling {s:?}")),
                }
            }
        }
    }
}
