//! Scenario files: parsing into typed specs, with diagnostics that name the
//! offending field.

use std::fmt;

use opalg::{CMatrix, Region, Tolerance, C64};
use serde_json::{Map, Value};

pub const VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Commutant,
    Independence,
    CpCheck,
    Kraus,
    Stinespring,
    Extend,
    CertifyTheorem1,
    NetDemo,
}

impl Command {
    const ALL: [(&'static str, Command); 9] = [
        ("analyze", Command::Analyze),
        ("commutant", Command::Commutant),
        ("independence", Command::Independence),
        ("cp-check", Command::CpCheck),
        ("kraus", Command::Kraus),
        ("stinespring", Command::Stinespring),
        ("extend", Command::Extend),
        ("certify-theorem1", Command::CertifyTheorem1),
        ("net-demo", Command::NetDemo),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, c)| *c == self)
            .map(|(n, _)| *n)
            .unwrap_or("?")
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone)]
pub enum AlgebraSpec {
    Generators {
        ambient_dim: usize,
        generators: Vec<CMatrix>,
    },
    TensorFactor {
        num_sites: usize,
        site_dim: usize,
        sites: Vec<usize>,
    },
    Diagonal(usize),
    Full(usize),
    Scalars(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Identity,
    Transpose,
    Depolarizing,
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Preset {
        preset: Preset,
        dim: usize,
    },
    PartialTranspose {
        a: usize,
        b: usize,
    },
    Kraus(Vec<CMatrix>),
    ConjugateUnitary(CMatrix),
    /// Images of the standard units `E_jk` of `M_dim`, row-major.
    BasisImages {
        dim: usize,
        images: Vec<CMatrix>,
    },
}

/// A map, optionally transported from `M_p` onto a factor `on ≅ M_p`.
#[derive(Debug, Clone)]
pub struct MapSpec {
    pub kind: MapKind,
    pub on: Option<AlgebraSpec>,
}

#[derive(Debug, Clone)]
pub enum NetDemo {
    Microcausality {
        r1: Region,
        r2: Region,
    },
    Separation {
        r1: Region,
        r2: Region,
    },
    Funnel {
        inner: Region,
        outer: Region,
        m: Option<Region>,
    },
    Corollary {
        regions: opalg::net::CorollaryRegions,
        map: MapSpec,
    },
}

#[derive(Debug, Clone)]
pub enum Payload {
    Analyze {
        algebra: AlgebraSpec,
    },
    Commutant {
        algebra: AlgebraSpec,
    },
    Independence {
        a1: AlgebraSpec,
        a2: AlgebraSpec,
        samples: usize,
    },
    CpCheck {
        map: MapSpec,
        positivity_trials: usize,
    },
    Kraus {
        map: MapSpec,
    },
    Stinespring {
        map: MapSpec,
    },
    Extend {
        map: MapSpec,
        n2: AlgebraSpec,
        m: Option<AlgebraSpec>,
    },
    CertifyTheorem1 {
        map: MapSpec,
        n2: AlgebraSpec,
        m: Option<AlgebraSpec>,
        n: usize,
        canonical_candidate: bool,
        samples: usize,
        positivity_trials: usize,
    },
    NetDemo {
        num_sites: usize,
        site_dim: usize,
        demo: NetDemo,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub version: String,
    pub command: Command,
    pub payload: Payload,
    pub tol: Tolerance,
    pub seed: u64,
}

/// Parse scenario text. Syntax errors come back as a single diagnostic with
/// line and column; schema errors as one diagnostic per offending field.
pub fn parse(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic {
            path: String::new(),
            message: format!(
                "parse error at line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ),
        }]
    })?;
    let mut cx = Cx::default();
    let scenario = cx.scenario(&value);
    match scenario {
        Some(s) if cx.diags.is_empty() => Ok(s),
        _ => Err(cx.diags),
    }
}

#[derive(Default)]
struct Cx {
    diags: Vec<Diagnostic>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Cx {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => Some(m),
            None => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn field<'a>(&mut self, m: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Value> {
        match m.get(key) {
            Some(v) => Some(v),
            None => {
                self.err(&join(path, key), "missing field");
                None
            }
        }
    }

    fn usize_at(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(n) => Some(n as usize),
            None => {
                self.err(path, "expected a non-negative integer");
                None
            }
        }
    }

    fn usize_field(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<usize> {
        let v = self.field(m, key, path)?;
        self.usize_at(v, &join(path, key))
    }

    fn opt_usize(
        &mut self,
        m: &Map<String, Value>,
        key: &str,
        path: &str,
        default: usize,
    ) -> usize {
        match m.get(key) {
            None => default,
            Some(v) => self.usize_at(v, &join(path, key)).unwrap_or(default),
        }
    }

    fn str_field<'a>(
        &mut self,
        m: &'a Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Option<&'a str> {
        let v = self.field(m, key, path)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.err(&join(path, key), "expected a string");
                None
            }
        }
    }

    fn array<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Vec<Value>> {
        match v.as_array() {
            Some(a) => Some(a),
            None => {
                self.err(path, "expected an array");
                None
            }
        }
    }

    fn scenario(&mut self, v: &Value) -> Option<Scenario> {
        let m = self.object(v, "")?;
        let version = self.str_field(m, "version", "").map(str::to_string);
        if let Some(ver) = &version {
            if ver != VERSION {
                self.err(
                    "version",
                    format!("unrecognized version {ver:?} (expected {VERSION:?})"),
                );
            }
        }
        let command = self.str_field(m, "command", "").and_then(|c| {
            let parsed = Command::parse(c);
            if parsed.is_none() {
                let names: Vec<&str> = Command::ALL.iter().map(|(n, _)| *n).collect();
                self.err(
                    "command",
                    format!(
                        "unknown command {c:?}; expected one of {}",
                        names.join(", ")
                    ),
                );
            }
            parsed
        });
        let tol = match m.get("tol") {
            None => Tolerance::default(),
            Some(t) => self.tolerance(t, "tol").unwrap_or_default(),
        };
        let seed = match m.get("seed") {
            None => 0,
            Some(s) => match s.as_u64() {
                Some(s) => s,
                None => {
                    self.err("seed", "expected a non-negative integer");
                    0
                }
            },
        };
        let payload_value = self.field(m, "payload", "");
        let payload = match (command, payload_value) {
            (Some(c), Some(p)) => self.payload(c, p, &tol),
            _ => None,
        };
        Some(Scenario {
            version: version?,
            command: command?,
            payload: payload?,
            tol,
            seed,
        })
    }

    fn tolerance(&mut self, v: &Value, path: &str) -> Option<Tolerance> {
        let m = self.object(v, path)?;
        let d = Tolerance::default();
        let get = |cx: &mut Self, key: &str, default: f64| match m.get(key) {
            None => Some(default),
            Some(x) => match x.as_f64() {
                Some(x) => Some(x),
                None => {
                    cx.err(&join(path, key), "expected a number");
                    None
                }
            },
        };
        let abs = get(self, "abs", d.abs)?;
        let rel = get(self, "rel", d.rel)?;
        match Tolerance::new(abs, rel) {
            Ok(t) => Some(t),
            Err(e) => {
                self.err(path, e.to_string());
                None
            }
        }
    }

    fn scalar(&mut self, v: &Value, path: &str) -> Option<C64> {
        if let Some(x) = v.as_f64() {
            return Some(C64::new(x, 0.0));
        }
        if let Some([re, im]) = v.as_array().map(Vec::as_slice) {
            if let (Some(re), Some(im)) = (re.as_f64(), im.as_f64()) {
                return Some(C64::new(re, im));
            }
        }
        self.err(path, "expected a number or a [re, im] pair");
        None
    }

    fn matrix(&mut self, v: &Value, path: &str) -> Option<CMatrix> {
        let rows = self.array(v, path)?;
        if rows.is_empty() {
            self.err(path, "matrix has no rows");
            return None;
        }
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{path}[{i}]");
            let row = self.array(row, &rp)?;
            let mut r = Vec::with_capacity(row.len());
            for (j, x) in row.iter().enumerate() {
                r.push(self.scalar(x, &format!("{rp}[{j}]"))?);
            }
            out.push(r);
        }
        match CMatrix::from_rows(&out) {
            Ok(m) => Some(m),
            Err(e) => {
                self.err(path, e.to_string());
                None
            }
        }
    }

    fn square(&mut self, v: &Value, path: &str, d: Option<usize>) -> Option<CMatrix> {
        let m = self.matrix(v, path)?;
        if !m.is_square() {
            self.err(
                path,
                format!("expected a square matrix, got {}x{}", m.rows(), m.cols()),
            );
            return None;
        }
        if let Some(d) = d {
            if m.rows() != d {
                self.err(
                    path,
                    format!("expected a {d}x{d} matrix, got {}x{}", m.rows(), m.cols()),
                );
                return None;
            }
        }
        Some(m)
    }

    fn matrices(&mut self, v: &Value, path: &str, d: Option<usize>) -> Option<Vec<CMatrix>> {
        let items = self.array(v, path)?;
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        let mut dim = d;
        for (i, x) in items.iter().enumerate() {
            match self.square(x, &format!("{path}[{i}]"), dim) {
                Some(m) => {
                    dim = Some(m.rows());
                    out.push(m);
                }
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn sites(&mut self, v: &Value, path: &str, num_sites: usize) -> Option<Vec<usize>> {
        let items = self.array(v, path)?;
        let mut out = Vec::with_capacity(items.len());
        let mut bad = None;
        for (i, x) in items.iter().enumerate() {
            let s = self.usize_at(x, &format!("{path}[{i}]"))?;
            if s >= num_sites && bad.is_none() {
                bad = Some(s);
            }
            out.push(s);
        }
        if let Some(s) = bad {
            self.err(
                path,
                format!("site {s} out of bounds for a {num_sites}-site net"),
            );
            return None;
        }
        Some(out)
    }

    fn region(
        &mut self,
        m: &Map<String, Value>,
        key: &str,
        path: &str,
        num_sites: usize,
    ) -> Option<Region> {
        let v = self.field(m, key, path)?;
        self.sites(v, &join(path, key), num_sites).map(Region::new)
    }

    fn positive_dim(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<usize> {
        let d = self.usize_field(m, key, path)?;
        if d == 0 {
            self.err(&join(path, key), "dimension must be positive");
            return None;
        }
        Some(d)
    }

    fn net_shape(&mut self, m: &Map<String, Value>, path: &str) -> Option<(usize, usize)> {
        let num_sites = self.usize_field(m, "num_sites", path);
        let site_dim = self.positive_dim(m, "site_dim", path);
        let (num_sites, site_dim) = (num_sites?, site_dim?);
        let dim = (site_dim as u128).checked_pow(num_sites as u32);
        if dim.is_none_or(|d| d > opalg::net::DEFAULT_CAP as u128) {
            self.err(
                path,
                format!(
                    "ambient dimension exceeds the cap {}",
                    opalg::net::DEFAULT_CAP
                ),
            );
            return None;
        }
        Some((num_sites, site_dim))
    }

    fn algebra(&mut self, v: &Value, path: &str) -> Option<AlgebraSpec> {
        let m = self.object(v, path)?;
        if let Some(preset) = m.get("preset") {
            let Some(preset) = preset.as_str() else {
                self.err(&join(path, "preset"), "expected a string");
                return None;
            };
            return match preset {
                "tensor_factor" => {
                    let (num_sites, site_dim) = self.net_shape(m, path)?;
                    let sites_v = self.field(m, "sites", path)?;
                    let sites = self.sites(sites_v, &join(path, "sites"), num_sites)?;
                    Some(AlgebraSpec::TensorFactor {
                        num_sites,
                        site_dim,
                        sites,
                    })
                }
                "diagonal" => self.positive_dim(m, "dim", path).map(AlgebraSpec::Diagonal),
                "full" => self.positive_dim(m, "dim", path).map(AlgebraSpec::Full),
                "scalars" => self.positive_dim(m, "dim", path).map(AlgebraSpec::Scalars),
                other => {
                    self.err(
                        &join(path, "preset"),
                        format!("unknown algebra preset {other:?}; expected tensor_factor, diagonal, full or scalars"),
                    );
                    None
                }
            };
        }
        let ambient_dim = self.positive_dim(m, "ambient_dim", path)?;
        let gens = self.field(m, "generators", path)?;
        let generators = self.matrices(gens, &join(path, "generators"), Some(ambient_dim))?;
        Some(AlgebraSpec::Generators {
            ambient_dim,
            generators,
        })
    }

    fn opt_algebra(
        &mut self,
        m: &Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Option<Option<AlgebraSpec>> {
        match m.get(key) {
            None => Some(None),
            Some(v) => self.algebra(v, &join(path, key)).map(Some),
        }
    }

    fn map(&mut self, v: &Value, path: &str, tol: &Tolerance) -> Option<MapSpec> {
        let m = self.object(v, path)?;
        let on = self.opt_algebra(m, "on", path)?;
        let keys = ["preset", "kraus", "conjugate_unitary", "basis_images"];
        let present: Vec<&str> = keys
            .iter()
            .copied()
            .filter(|k| m.contains_key(*k))
            .collect();
        if present.len() != 1 {
            self.err(path, format!("expected exactly one of {}", keys.join(", ")));
            return None;
        }
        let kind = match present[0] {
            "preset" => {
                let name = self.str_field(m, "preset", path)?;
                let preset = match name {
                    "identity" => Preset::Identity,
                    "transpose" => Preset::Transpose,
                    "depolarizing" => Preset::Depolarizing,
                    "partial_transpose" => {
                        let dims = self.field(m, "dims", path)?;
                        let dp = join(path, "dims");
                        let arr = self.array(dims, &dp)?;
                        if arr.len() != 2 {
                            self.err(&dp, "expected two dimensions [a, b]");
                            return None;
                        }
                        let a = self.usize_at(&arr[0], &format!("{dp}[0]"))?;
                        let b = self.usize_at(&arr[1], &format!("{dp}[1]"))?;
                        if a == 0 || b == 0 {
                            self.err(&dp, "dimensions must be positive");
                            return None;
                        }
                        return Some(MapSpec {
                            kind: MapKind::PartialTranspose { a, b },
                            on,
                        });
                    }
                    other => {
                        self.err(
                            &join(path, "preset"),
                            format!(
                                "unknown map preset {other:?}; expected identity, transpose, depolarizing or partial_transpose"
                            ),
                        );
                        return None;
                    }
                };
                let dim = self.positive_dim(m, "dim", path)?;
                MapKind::Preset { preset, dim }
            }
            "kraus" => {
                let kp = join(path, "kraus");
                let ks = self.array(&m["kraus"], &kp)?;
                if ks.is_empty() {
                    self.err(&kp, "at least one Kraus operator is required");
                    return None;
                }
                let mut ops = Vec::with_capacity(ks.len());
                for (i, k) in ks.iter().enumerate() {
                    ops.push(self.matrix(k, &format!("{kp}[{i}]"))?);
                }
                let (r, c) = (ops[0].rows(), ops[0].cols());
                if let Some(i) = ops.iter().position(|k| (k.rows(), k.cols()) != (r, c)) {
                    self.err(
                        &format!("{kp}[{i}]"),
                        format!("shape differs from the first operator ({r}x{c})"),
                    );
                    return None;
                }
                MapKind::Kraus(ops)
            }
            "conjugate_unitary" => {
                let up = join(path, "conjugate_unitary");
                let u = self.square(&m["conjugate_unitary"], &up, None)?;
                let d = u.rows();
                let residual = (&u.adjoint() * &u).dist(&CMatrix::identity(d));
                if residual > tol.threshold(1.0) {
                    self.err(
                        &up,
                        format!("not unitary within tol (|U^†U - I| = {residual:.3e})"),
                    );
                    return None;
                }
                MapKind::ConjugateUnitary(u)
            }
            _ => {
                let bp = join(path, "basis_images");
                let b = self.object(&m["basis_images"], &bp)?;
                let dim = self.positive_dim(b, "dim", &bp)?;
                let images_v = self.field(b, "images", &bp)?;
                let ip = join(&bp, "images");
                let images = self.matrices(images_v, &ip, None)?;
                if images.len() != dim * dim {
                    self.err(
                        &ip,
                        format!(
                            "expected {} images (one per unit of M_{dim}), got {}",
                            dim * dim,
                            images.len()
                        ),
                    );
                    return None;
                }
                MapKind::BasisImages { dim, images }
            }
        };
        Some(MapSpec { kind, on })
    }

    fn payload(&mut self, command: Command, v: &Value, tol: &Tolerance) -> Option<Payload> {
        let p = "payload";
        let m = self.object(v, p)?;
        let algebra = |cx: &mut Self, key: &str| {
            let v = cx.field(m, key, p)?;
            cx.algebra(v, &join(p, key))
        };
        let map = |cx: &mut Self| {
            let v = cx.field(m, "map", p)?;
            cx.map(v, &join(p, "map"), tol)
        };
        Some(match command {
            Command::Analyze => Payload::Analyze {
                algebra: algebra(self, "algebra")?,
            },
            Command::Commutant => Payload::Commutant {
                algebra: algebra(self, "algebra")?,
            },
            Command::Independence => {
                let a1 = algebra(self, "a1");
                let a2 = algebra(self, "a2");
                let samples = self.opt_usize(m, "samples", p, 50);
                Payload::Independence {
                    a1: a1?,
                    a2: a2?,
                    samples,
                }
            }
            Command::CpCheck => {
                let positivity_trials = self.opt_usize(m, "positivity_trials", p, 200);
                Payload::CpCheck {
                    map: map(self)?,
                    positivity_trials,
                }
            }
            Command::Kraus => Payload::Kraus { map: map(self)? },
            Command::Stinespring => Payload::Stinespring { map: map(self)? },
            Command::Extend => {
                let mp = map(self);
                let n2 = algebra(self, "n2");
                let ma = self.opt_algebra(m, "m", p);
                Payload::Extend {
                    map: mp?,
                    n2: n2?,
                    m: ma?,
                }
            }
            Command::CertifyTheorem1 => {
                let mp = map(self);
                let n2 = algebra(self, "n2");
                let ma = self.opt_algebra(m, "m", p);
                let n = self.opt_usize(m, "n", p, 2);
                let canonical_candidate = match m.get("candidate").map(|c| c.as_str()) {
                    None | Some(Some("extend")) => false,
                    Some(Some("canonical")) => true,
                    _ => {
                        self.err(
                            &join(p, "candidate"),
                            "expected \"extend\" or \"canonical\"",
                        );
                        return None;
                    }
                };
                let samples = self.opt_usize(m, "samples", p, 16);
                let positivity_trials = self.opt_usize(m, "positivity_trials", p, 200);
                Payload::CertifyTheorem1 {
                    map: mp?,
                    n2: n2?,
                    m: ma?,
                    n,
                    canonical_candidate,
                    samples,
                    positivity_trials,
                }
            }
            Command::NetDemo => {
                let nv = self.field(m, "net", p)?;
                let np = join(p, "net");
                let nm = self.object(nv, &np)?;
                let (num_sites, site_dim) = self.net_shape(nm, &np)?;
                let demo = self.net_demo(m, p, num_sites, tol)?;
                Payload::NetDemo {
                    num_sites,
                    site_dim,
                    demo,
                }
            }
        })
    }

    fn net_demo(
        &mut self,
        m: &Map<String, Value>,
        p: &str,
        n: usize,
        tol: &Tolerance,
    ) -> Option<NetDemo> {
        let kind = self.str_field(m, "demo", p)?;
        Some(match kind {
            "microcausality" | "separation" => {
                let r1 = self.region(m, "r1", p, n);
                let r2 = self.region(m, "r2", p, n);
                let (r1, r2) = (r1?, r2?);
                if kind == "microcausality" {
                    NetDemo::Microcausality { r1, r2 }
                } else {
                    NetDemo::Separation { r1, r2 }
                }
            }
            "funnel" => {
                let inner = self.region(m, "inner", p, n);
                let outer = self.region(m, "outer", p, n);
                let mr = match m.get("m") {
                    None => Some(None),
                    Some(_) => self.region(m, "m", p, n).map(Some),
                };
                NetDemo::Funnel {
                    inner: inner?,
                    outer: outer?,
                    m: mr?,
                }
            }
            "corollary" => {
                let rv = self.field(m, "regions", p)?;
                let rp = join(p, "regions");
                let rm = self.object(rv, &rp)?;
                let inner1 = self.region(rm, "inner1", &rp, n);
                let outer1 = self.region(rm, "outer1", &rp, n);
                let inner2 = self.region(rm, "inner2", &rp, n);
                let outer2 = self.region(rm, "outer2", &rp, n);
                let mv = self.field(m, "map", p)?;
                let map = self.map(mv, &join(p, "map"), tol);
                NetDemo::Corollary {
                    regions: opalg::net::CorollaryRegions {
                        inner1: inner1?,
                        outer1: outer1?,
                        inner2: inner2?,
                        outer2: outer2?,
                    },
                    map: map?,
                }
            }
            other => {
                self.err(
                    &join(p, "demo"),
                    format!("unknown demo {other:?}; expected microcausality, separation, funnel or corollary"),
                );
                return None;
            }
        })
    }
}
