//! Parsing for command-line parameter literals. Complex numbers are always
//! explicit "re,im" pairs; lists separate entries with semicolons.

use num_complex::Complex64;

pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let mut parts = text.splitn(2, ',');
    let re = parts
        .next()
        .ok_or_else(|| format!("expected re,im pair, got \"{text}\""))?;
    let im = parts
        .next()
        .ok_or_else(|| format!("expected re,im pair, got \"{text}\""))?;
    let re: f64 = re
        .trim()
        .parse()
        .map_err(|_| format!("invalid real part in \"{text}\""))?;
    let im: f64 = im
        .trim()
        .parse()
        .map_err(|_| format!("invalid imaginary part in \"{text}\""))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("coefficients must be finite, got \"{text}\""));
    }
    Ok(Complex64::new(re, im))
}

pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, String> {
    text.split(';')
        .filter(|chunk| !chunk.trim().is_empty())
        .map(parse_complex)
        .collect()
}

pub fn parse_indices(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .filter(|chunk| !chunk.trim().is_empty())
        .map(|chunk| {
            chunk
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("invalid index \"{chunk}\""))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_pairs_parse() {
        assert_eq!(parse_complex("0.6,0").unwrap(), Complex64::new(0.6, 0.0));
        assert_eq!(parse_complex("-1,0.5").unwrap(), Complex64::new(-1.0, 0.5));
        assert!(parse_complex("1").is_err());
        assert!(parse_complex("a,b").is_err());
        assert!(parse_complex("inf,0").is_err());
    }

    #[test]
    fn complex_lists_parse() {
        let list = parse_complex_list("1,0;0,-1").unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list[1], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn index_lists_parse() {
        assert_eq!(parse_indices("1,7").unwrap(), vec![1, 7]);
        assert!(parse_indices("1,x").is_err());
    }
}
