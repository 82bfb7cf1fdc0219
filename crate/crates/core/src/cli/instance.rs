//! Instance files: a small TOML dialect declaring the backend, `n`, `g`, named points and
//! an optional module family.
//!
//! ```toml
//! backend = "rational:5"
//! n = 2
//! g = 1
//! sigma = [1, 2]
//!
//! [points.E1]
//! a = [2, "zero"]                 # integer k means ϖ^k
//! b = ["zero", { ord = 3, unit = "2/3" }]
//! c = [{ raw = "25" }]
//!
//! [family]
//! base = "canonical"              # canonical | minimal-zero | table
//! mu_constant = 1                 # or a [family.mu] table keyed by "[..]" subsets
//! depth = true
//! gorenstein = true
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use toml::Spanned;

use super::CliError;
use crate::congruence::{BasePsi, FamilyFlags, FamilySpec, RankFunction};
use crate::dvr::{BackendSpec, Dvr};
use crate::fuzz::Check;
use crate::ringfam::{Instance, OPoint, PointProfile, SigmaSet};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    backend: Option<Spanned<String>>,
    n: Spanned<i64>,
    g: Option<Spanned<i64>>,
    sigma: Option<Spanned<Vec<i64>>>,
    s: Option<Spanned<i64>>,
    #[serde(default)]
    points: BTreeMap<String, Spanned<RawPoint>>,
    family: Option<Spanned<RawFamily>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    #[serde(default)]
    a: Vec<RawCoord>,
    #[serde(default)]
    b: Vec<RawCoord>,
    #[serde(default)]
    c: Vec<RawCoord>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCoord {
    Ord(i64),
    Word(String),
    Table {
        ord: Option<i64>,
        unit: Option<RawUnit>,
        raw: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawUnit {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    base: Option<String>,
    mu_constant: Option<Spanned<i64>>,
    mu: Option<BTreeMap<String, Spanned<i64>>>,
    base_psi: Option<BTreeMap<String, Spanned<i64>>>,
    #[serde(default)]
    depth: bool,
    #[serde(default)]
    gorenstein: bool,
    #[serde(default)]
    override_gate: bool,
}

/// One coordinate as written in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoordSpec {
    Zero,
    Ord { ord: u32, unit: Option<String> },
    Raw(String),
}

impl Serialize for CoordSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            CoordSpec::Zero => serializer.serialize_str("zero"),
            CoordSpec::Ord { ord, unit: None } => serializer.serialize_u32(*ord),
            CoordSpec::Ord { ord, unit: Some(u) } => {
                let mut m = serializer.serialize_map(Some(2))?;
                m.serialize_entry("ord", ord)?;
                m.serialize_entry("unit", u)?;
                m.end()
            }
            CoordSpec::Raw(r) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("raw", r)?;
                m.end()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointDecl {
    pub name: String,
    #[serde(skip)]
    pub line: usize,
    pub a: Vec<CoordSpec>,
    pub b: Vec<CoordSpec>,
    pub c: Vec<CoordSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceFile {
    pub backend: Option<BackendSpec>,
    pub n: usize,
    pub g: usize,
    pub sigma: Option<SigmaSet>,
    pub s: Option<usize>,
    pub points: Vec<PointDecl>,
    pub family: Option<FamilySpec>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_err(
    line: Option<usize>,
    field: impl Into<String>,
    message: impl Into<String>,
) -> CliError {
    CliError::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

/// Parses a subset written as a sorted index list, e.g. `[1,3]` or `{}`.
pub fn parse_subset(
    text: &str,
    n: usize,
    field: &str,
    line: Option<usize>,
) -> Result<SigmaSet, CliError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .or_else(|| t.strip_prefix('{').and_then(|r| r.strip_suffix('}')))
        .unwrap_or(t);
    let mut indices = Vec::new();
    for tok in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i: i64 = tok
            .parse()
            .map_err(|_| parse_err(line, field, format!("`{tok}` is not an index")))?;
        indices.push(i);
    }
    subset_from_indices(&indices, n, field, line)
}

fn subset_from_indices(
    indices: &[i64],
    n: usize,
    field: &str,
    line: Option<usize>,
) -> Result<SigmaSet, CliError> {
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parse_err(
            line,
            field,
            "subsets are written as strictly increasing index lists",
        ));
    }
    let mut out = SigmaSet::EMPTY;
    for &i in indices {
        if i < 1 || i as usize > n {
            return Err(parse_err(
                line,
                field,
                format!("index {i} outside T = {{1,…,{n}}}"),
            ));
        }
        out = out.with(i as usize);
    }
    Ok(out)
}

fn convert_coord(raw: RawCoord, field: &str, line: usize) -> Result<CoordSpec, CliError> {
    let bad_ord = |k: i64| {
        parse_err(
            Some(line),
            field,
            format!("order {k} must be ≥ 1 (coordinates lie in ϖ(O))"),
        )
    };
    match raw {
        RawCoord::Ord(k) if k >= 1 => Ok(CoordSpec::Ord {
            ord: k as u32,
            unit: None,
        }),
        RawCoord::Ord(k) => Err(bad_ord(k)),
        RawCoord::Word(w) if w == "zero" || w == "0" => Ok(CoordSpec::Zero),
        RawCoord::Word(w) => Err(parse_err(
            Some(line),
            field,
            format!("`{w}`: expected \"zero\", an order, {{ ord, unit }} or {{ raw }}"),
        )),
        RawCoord::Table {
            ord: Some(k),
            unit,
            raw: None,
        } => {
            if k < 1 {
                return Err(bad_ord(k));
            }
            let unit = unit.map(|u| match u {
                RawUnit::Int(i) => i.to_string(),
                RawUnit::Text(t) => t,
            });
            Ok(CoordSpec::Ord {
                ord: k as u32,
                unit,
            })
        }
        RawCoord::Table {
            ord: None,
            unit: None,
            raw: Some(r),
        } => Ok(CoordSpec::Raw(r)),
        RawCoord::Table { .. } => Err(parse_err(
            Some(line),
            field,
            "coordinate table needs either `ord` (with optional `unit`) or `raw`",
        )),
    }
}

fn nonneg(v: &Spanned<i64>, text: &str, field: &str) -> Result<u64, CliError> {
    u64::try_from(*v.get_ref()).map_err(|_| {
        parse_err(
            Some(line_of(text, v.span().start)),
            field,
            "must be nonnegative",
        )
    })
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            parse_err(line, "document", e.message().trim().to_string())
        })?;

        let backend = match &raw.backend {
            Some(b) => Some(
                b.get_ref()
                    .parse::<BackendSpec>()
                    .map_err(|m| parse_err(Some(line_of(text, b.span().start)), "backend", m))?,
            ),
            None => None,
        };
        let n_line = line_of(text, raw.n.span().start);
        let n = usize::try_from(*raw.n.get_ref())
            .ok()
            .filter(|&n| (1..=crate::ringfam::MAX_N).contains(&n))
            .ok_or_else(|| parse_err(Some(n_line), "n", "n must satisfy 1 ≤ n ≤ 30"))?;
        let g = match &raw.g {
            Some(g) => nonneg(g, text, "g")? as usize,
            None => 0,
        };
        let inst = Instance::new(n, g).map_err(|e| parse_err(Some(n_line), "n", e.to_string()))?;

        let sigma = match &raw.sigma {
            Some(s) => Some(subset_from_indices(
                s.get_ref(),
                n,
                "sigma",
                Some(line_of(text, s.span().start)),
            )?),
            None => None,
        };
        let s = match &raw.s {
            Some(sv) => {
                let line = Some(line_of(text, sv.span().start));
                let k = *sv.get_ref();
                if k < 1 || k as usize > n {
                    return Err(parse_err(
                        line,
                        "s",
                        format!("index {k} outside T = {{1,…,{n}}}"),
                    ));
                }
                Some(k as usize)
            }
            None => None,
        };

        let mut points = Vec::new();
        for (name, sp) in raw.points {
            let line = line_of(text, sp.span().start);
            let field = format!("points.{name}");
            let rp = sp.into_inner();
            let conv = |xs: Vec<RawCoord>,
                        coord: &str,
                        expected: usize|
             -> Result<Vec<CoordSpec>, CliError> {
                let f = format!("{field}.{coord}");
                if xs.len() != expected {
                    return Err(parse_err(
                        Some(line),
                        &f,
                        format!("expected {expected} coordinates, found {}", xs.len()),
                    ));
                }
                xs.into_iter().map(|x| convert_coord(x, &f, line)).collect()
            };
            points.push(PointDecl {
                a: conv(rp.a, "a", n)?,
                b: conv(rp.b, "b", n)?,
                c: conv(rp.c, "c", g)?,
                name,
                line,
            });
        }

        let family = match raw.family {
            Some(f) => Some(Self::parse_family(text, inst, f)?),
            None => None,
        };

        Ok(InstanceFile {
            backend,
            n,
            g,
            sigma,
            s,
            points,
            family,
        })
    }

    fn parse_family(
        text: &str,
        inst: Instance,
        f: Spanned<RawFamily>,
    ) -> Result<FamilySpec, CliError> {
        let fam_line = Some(line_of(text, f.span().start));
        let f = f.into_inner();
        let table = |map: &BTreeMap<String, Spanned<i64>>,
                     field: &str|
         -> Result<BTreeMap<SigmaSet, u64>, CliError> {
            let mut out = BTreeMap::new();
            for (key, v) in map {
                let line = Some(line_of(text, v.span().start));
                let f = format!("{field}.{key}");
                let sub = parse_subset(key, inst.n, &f, line)?;
                out.insert(sub, nonneg(v, text, &f)?);
            }
            Ok(out)
        };
        let mu = match (&f.mu_constant, &f.mu) {
            (Some(_), Some(_)) => {
                return Err(parse_err(
                    fam_line,
                    "family",
                    "give either mu_constant or a mu table, not both",
                ))
            }
            (Some(k), None) => {
                RankFunction::constant(inst.n, nonneg(k, text, "family.mu_constant")?)
            }
            (None, Some(m)) => {
                let t = table(m, "family.mu")?;
                RankFunction::from_table(inst.n, &t)
                    .map_err(|e| parse_err(fam_line, "family.mu", e.to_string()))?
            }
            (None, None) => {
                return Err(CliError::Config(
                    "family declares no rank function (add mu_constant or a [family.mu] table)"
                        .into(),
                ))
            }
        };
        let base = match f.base.as_deref().unwrap_or("canonical") {
            "canonical" => BasePsi::Canonical,
            "minimal-zero" => BasePsi::MinimalZero,
            "table" => {
                let t = table(
                    f.base_psi.as_ref().unwrap_or(&BTreeMap::new()),
                    "family.base_psi",
                )?;
                BasePsi::table(t)
                    .map_err(|e| parse_err(fam_line, "family.base_psi", e.to_string()))?
            }
            other => {
                return Err(parse_err(
                    fam_line,
                    "family.base",
                    format!("unknown provider `{other}` (canonical, minimal-zero, table)"),
                ))
            }
        };
        if f.base_psi.is_some() && !matches!(base, BasePsi::Table(_)) {
            return Err(parse_err(
                fam_line,
                "family.base_psi",
                "base_psi table requires base = \"table\"",
            ));
        }
        let flags = FamilyFlags {
            depth: f.depth,
            gorenstein: f.gorenstein,
            override_gate: f.override_gate,
        };
        FamilySpec::new(inst, mu, base, flags)
            .map_err(|e| parse_err(fam_line, "family", e.to_string()))
    }

    pub fn instance(&self) -> Instance {
        Instance {
            n: self.n,
            g: self.g,
        }
    }

    pub fn point(&self, name: &str) -> Result<&PointDecl, CliError> {
        self.points.iter().find(|p| p.name == name).ok_or_else(|| {
            CliError::Config(format!("no point named `{name}` in the instance file"))
        })
    }

    pub fn family(&self) -> Result<&FamilySpec, CliError> {
        self.family.as_ref().ok_or_else(|| {
            CliError::Config("instance file has no [family] section (mu table missing)".into())
        })
    }

    /// Builds the point in the given backend and checks it lies on `Spec A`.
    pub fn realize<D: Dvr>(&self, dvr: &D, decl: &PointDecl) -> Result<OPoint<D::Elem>, CliError> {
        let field = format!("points.{}", decl.name);
        let conv = |xs: &[CoordSpec], coord: char| -> Result<Vec<D::Elem>, CliError> {
            xs.iter()
                .enumerate()
                .map(|(i, c)| {
                    let f = format!("{field}.{coord}[{}]", i + 1);
                    let err =
                        |e: crate::dvr::DvrError| parse_err(Some(decl.line), &f, e.to_string());
                    match c {
                        CoordSpec::Zero => Ok(dvr.zero()),
                        CoordSpec::Ord { ord, unit: None } => Ok(dvr.uniformizer_power(*ord)),
                        CoordSpec::Ord { ord, unit: Some(u) } => {
                            Ok(dvr.element(*ord, &dvr.parse_unit(u).map_err(err)?))
                        }
                        CoordSpec::Raw(r) => dvr.parse_elem(r).map_err(err),
                    }
                })
                .collect()
        };
        let v = OPoint {
            a: conv(&decl.a, 'a')?,
            b: conv(&decl.b, 'b')?,
            c: conv(&decl.c, 'c')?,
        };
        v.validate(dvr, &self.instance())
            .map_err(|e| parse_err(Some(decl.line), &field, e.to_string()))?;
        Ok(v)
    }
}

fn coord_toml(ord: Option<u32>, raw: Option<&String>) -> String {
    match (ord, raw) {
        (None, _) => "\"zero\"".into(),
        (Some(_), Some(r)) => format!("{{ raw = \"{r}\" }}"),
        (Some(k), None) => k.to_string(),
    }
}

/// Instance file reproducing a fuzz counterexample.
#[allow(clippy::too_many_arguments)]
pub fn render_counterexample(
    backend: BackendSpec,
    inst: Instance,
    sigma: SigmaSet,
    s: Option<usize>,
    point: &PointProfile,
    raw: Option<&(Vec<String>, Vec<String>, Vec<String>)>,
    mu_empty: u64,
    check: Check,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# fuzz counterexample, failing check: {check:?}");
    let _ = writeln!(out, "backend = \"{backend}\"");
    let _ = writeln!(out, "n = {}", inst.n);
    let _ = writeln!(out, "g = {}", inst.g);
    let idx: Vec<String> = sigma.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(out, "sigma = [{}]", idx.join(", "));
    if let Some(s) = s {
        let _ = writeln!(out, "s = {s}");
    }
    let _ = writeln!(out, "\n[points.counterexample]");
    for (name, ords, raws) in [
        ("a", &point.a, raw.map(|r| &r.0)),
        ("b", &point.b, raw.map(|r| &r.1)),
        ("c", &point.c, raw.map(|r| &r.2)),
    ] {
        let items: Vec<String> = ords
            .iter()
            .enumerate()
            .map(|(i, o)| coord_toml(*o, raws.map(|r| &r[i])))
            .collect();
        let _ = writeln!(out, "{name} = [{}]", items.join(", "));
    }
    if check == Check::FreeSummand {
        let _ = writeln!(out, "\n[family]\nbase = \"minimal-zero\"\n\n[family.mu]");
        for sub in inst.subsets() {
            let m = if sub.is_empty() {
                mu_empty
            } else {
                mu_empty + 1
            };
            let idx: Vec<String> = sub.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "\"[{}]\" = {m}", idx.join(","));
        }
    } else {
        let _ = writeln!(out, "\n[family]\nbase = \"canonical\"\nmu_constant = 1");
    }
    out
}
