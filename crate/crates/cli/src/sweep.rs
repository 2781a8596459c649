use std::str::FromStr;

/// Grid given as `start:stop:count`, `log:start:stop:count` or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad number '{x}' in sweep '{s}': {e}"));
        let (log, rest) = match parts.first() {
            Some(&"log") => (true, &parts[1..]),
            _ => (false, &parts[..]),
        };
        match rest {
            [single] if !log => Ok(Self { values: vec![num(single)?] }),
            [a, b, n] => {
                let (a, b) = (num(a)?, num(b)?);
                let n: usize = n.trim().parse().map_err(|e| format!("bad count in sweep '{s}': {e}"))?;
                if n == 0 {
                    return Err(format!("sweep '{s}' needs a positive count"));
                }
                if log && !(a > 0.0 && b > 0.0) {
                    return Err(format!("log sweep '{s}' needs positive bounds"));
                }
                if !a.is_finite() || !b.is_finite() {
                    return Err(format!("sweep '{s}' has non-finite bounds"));
                }
                let values = (0..n)
                    .map(|k| {
                        let f = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                        if log {
                            a * (b / a).powf(f)
                        } else {
                            a + (b - a) * f
                        }
                    })
                    .collect();
                Ok(Self { values })
            }
            _ => Err(format!("sweep '{s}' must be start:stop:count, log:start:stop:count or a number")),
        }
    }
}
