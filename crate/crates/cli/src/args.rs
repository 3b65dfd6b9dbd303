//! String-level parsers shared by command-line flags and JSON job files.
//!
//! Every parser returns `Result<_, String>` so it can double as a clap
//! `value_parser` (clap turns the message into a usage error, exit code 2)
//! and as a manual parse step for job files.

use serde::{Deserialize, Serialize};
use toda_cft::blocks::SemiDegDirection;
use toda_cft::exact::{CoeffB, Rat};
use toda_cft::fields::{make_scalar, FieldLabel};
use toda_cft::kinematics::DegenerateLabel;
use toda_cft::lattice::{Charge, WeylElement};

/// Exact rational from `p/q`, a plain integer, or a terminating decimal.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|e| format!("bad numerator in {t:?}: {e}"))?;
        let q: i64 = q.trim().parse().map_err(|e| format!("bad denominator in {t:?}: {e}"))?;
        if q == 0 {
            return Err(format!("zero denominator in {t:?}"));
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|e| format!("bad number {t:?}: {e}"))?
        };
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal {t:?} (up to 12 fractional digits)"));
        }
        let den = 10i64.pow(frac.len() as u32);
        let num: i64 = frac.parse().unwrap();
        let tail = Rat::new(num, den);
        let whole = Rat::from_integer(whole);
        return Ok(if neg { whole - tail } else { whole + tail });
    }
    let p: i64 = t.parse().map_err(|e| format!("bad rational {t:?}: {e}"))?;
    Ok(Rat::from_integer(p))
}

/// Exact `u + v b + w/b` coefficient from three comma-separated rationals.
pub fn parse_coeffb(s: &str) -> Result<CoeffB, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected \"u,v,w\" with three rationals, got {s:?}"));
    }
    Ok(CoeffB::new(parse_rat(parts[0])?, parse_rat(parts[1])?, parse_rat(parts[2])?))
}

/// `name=value` binding for a continuous parameter.
pub fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("bad value in {s:?}: {e}"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty parameter name in {s:?}"));
    }
    Ok((name.to_string(), v))
}

/// Rebuild a deserialized charge through the validating constructors, so a
/// hand-written JSON object cannot carry inconsistent coordinate lengths.
pub fn revalidate_charge(c: &Charge) -> Result<Charge, String> {
    let mut rebuilt = Charge::new(c.rank(), c.coords().to_vec()).map_err(|e| e.to_string())?;
    for p in c.cont_params() {
        rebuilt = rebuilt
            .with_cont(&p.name, p.direction.clone())
            .map_err(|e| e.to_string())?;
    }
    Ok(rebuilt)
}

/// Momentum from a JSON charge object or a comma-separated list of rational
/// `omega`-basis coordinates (rank = list length + 1).
pub fn parse_charge(s: &str) -> Result<Charge, String> {
    let t = s.trim();
    if t.starts_with('{') {
        let c: Charge = serde_json::from_str(t).map_err(|e| format!("bad charge JSON: {e}"))?;
        return revalidate_charge(&c);
    }
    let coords: Vec<Rat> = t.split(',').map(parse_rat).collect::<Result<_, _>>()?;
    Charge::from_rational_coords(coords.len() + 1, &coords).map_err(|e| e.to_string())
}

/// A three-point participant as given on the command line: either a full
/// spinning-field label or a bare momentum promoted to a scalar field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldInput {
    Label(FieldLabel),
    Momentum(Charge),
}

impl FieldInput {
    /// Validate and promote to a field label of rank `n`. Deserialized
    /// labels are rebuilt through the checking constructors so invalid
    /// JSON cannot bypass the lattice constraints.
    pub fn into_label(self, n: usize) -> Result<FieldLabel, String> {
        let label = match self {
            FieldInput::Label(f) => {
                let images: Vec<usize> = (1..=f.sigma.rank()).map(|i| f.sigma.image(i)).collect();
                let sigma = WeylElement::from_images(&images).map_err(|e| e.to_string())?;
                let alpha = revalidate_charge(&f.alpha)?;
                let alphabar = revalidate_charge(&f.alphabar)?;
                FieldLabel::new(alpha, alphabar, sigma).map_err(|e| e.to_string())?
            }
            FieldInput::Momentum(c) => {
                make_scalar(revalidate_charge(&c)?).map_err(|e| e.to_string())?
            }
        };
        if label.rank() != n {
            return Err(format!("field has rank {}, expected {}", label.rank(), n));
        }
        Ok(label)
    }
}

/// Field input from JSON (a label or a charge) or compact rational
/// coordinates (a scalar).
pub fn parse_field_input(s: &str) -> Result<FieldInput, String> {
    let t = s.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| format!("bad field JSON: {e}"));
    }
    Ok(FieldInput::Momentum(parse_charge(t)?))
}

/// Permutation of `1..=n` in cycle notation: `"(123)"`, `"(1 2 3)(4 5)"`,
/// or `"e"` / `"()"` for the identity. Entries above 9 need space or comma
/// separators. Cycles must be disjoint.
pub fn parse_cycles(n: usize, s: &str) -> Result<WeylElement, String> {
    let t = s.trim();
    if t.is_empty() || t == "e" || t == "id" || t == "()" {
        return Ok(WeylElement::identity(n));
    }
    let mut element = WeylElement::identity(n);
    let mut seen = vec![false; n + 1];
    let mut rest = t;
    while !rest.is_empty() {
        let inner = rest
            .strip_prefix('(')
            .ok_or_else(|| format!("expected '(' in cycle notation {t:?}"))?;
        let (body, tail) = inner
            .split_once(')')
            .ok_or_else(|| format!("unclosed cycle in {t:?}"))?;
        rest = tail.trim_start();
        let entries = parse_cycle_entries(body, t)?;
        for &k in &entries {
            if k == 0 || k > n {
                return Err(format!("cycle entry {k} out of range 1..={n}"));
            }
            if seen[k] {
                return Err(format!("entry {k} repeats; cycles must be disjoint"));
            }
            seen[k] = true;
        }
        if entries.len() > 1 {
            let cyc = WeylElement::cycle(n, &entries).map_err(|e| e.to_string())?;
            element = element.compose(&cyc);
        }
    }
    Ok(element)
}

fn parse_cycle_entries(body: &str, whole: &str) -> Result<Vec<usize>, String> {
    let body = body.trim();
    if body.is_empty() {
        return Ok(Vec::new());
    }
    if body.contains([' ', ',']) {
        return body
            .split([' ', ','])
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<usize>().map_err(|e| format!("bad cycle entry {p:?} in {whole:?}: {e}")))
            .collect();
    }
    if !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("bad cycle body {body:?} in {whole:?}"));
    }
    Ok(body.bytes().map(|b| (b - b'0') as usize).collect())
}

/// Weight-line direction from `omega1` or `omega-last`.
pub fn parse_direction(s: &str) -> Result<SemiDegDirection, String> {
    match normalize(s).as_str() {
        "omega1" => Ok(SemiDegDirection::Omega1),
        "omegalast" => Ok(SemiDegDirection::OmegaLast),
        _ => Err(format!("unknown direction {s:?}; use omega1 or omega-last")),
    }
}

/// Fully degenerate label from its kebab-case name, e.g. `b-omega1` or
/// `minus-omega-last-over-b`. Separators and case are ignored.
pub fn parse_label(s: &str) -> Result<DegenerateLabel, String> {
    match normalize(s).as_str() {
        "bomega1" => Ok(DegenerateLabel::BOmega1),
        "bomegalast" => Ok(DegenerateLabel::BOmegaLast),
        "minusomega1overb" => Ok(DegenerateLabel::MinusOmega1OverB),
        "minusomegalastoverb" => Ok(DegenerateLabel::MinusOmegaLastOverB),
        _ => Err(format!(
            "unknown degenerate label {s:?}; use b-omega1, b-omega-last, \
             minus-omega1-over-b, or minus-omega-last-over-b"
        )),
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .map(|c| c.to_ascii_lowercase())
        .collect()
}
