//! Grid syntax: `a..b` or `a..b:step` (inclusive), or a comma list.

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty grid".into());
    }
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, number(step)?),
            None => (rest, 1.0),
        };
        let (lo, hi) = (number(lo)?, number(hi)?);
        if !(step > 0.0) {
            return Err(format!("step must be positive in `{text}`"));
        }
        if hi < lo {
            return Err(format!("range `{text}` is empty"));
        }
        // index-based so float steps do not accumulate drift
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| lo + i as f64 * step).collect());
    }
    text.split(',').map(number).collect()
}

pub fn parse_count_grid(text: &str) -> Result<Vec<usize>, String> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(format!("`{v}` is not a whole count"))
            }
        })
        .collect()
}

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a number")),
    }
}
