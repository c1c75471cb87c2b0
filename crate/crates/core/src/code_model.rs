//! CSS code definitions, construction, ingestion and outcome grading.
//!
//! A code is a pair of GF(2) parity-check matrices over the same qubit
//! count whose row spaces are mutually orthogonal. Stream-a errors are the
//! component detected by `h_a`, stream-b the component detected by `h_b`.
//! Degeneracy makes grading coarser than exact recovery: a residual on one
//! stream is harmless when it lies in the row space of the opposite
//! matrix, so classification is row-space membership against cached
//! echelon forms rather than comparison with the sampled error.
//!
//! External matrices come in via the alist sparse text format (header
//! `n m`, max column/row degrees, per-column then per-row 1-based index
//! lists, zero padded). A small manifest file names a code and points at
//! one alist per stream, which is how generated codes round-trip through
//! the CLI.

use crate::channel::PauliFrame;
use crate::error::{Error, Result};
use crate::gf2::{symplectic_check, BitMatrix, BitVec, EchelonForm};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OutcomeKind {
    /// Syndrome matched and the residual is stabilizer-equivalent to zero.
    Converged,
    /// Syndrome matched but the residual acts on the logical subspace.
    LogicalError,
    /// The decoder hit its budget with a nonzero residual syndrome.
    NonConvergence,
}

/// Per-frame grading record kept by the evaluation harness.
#[derive(Clone, Copy, Debug)]
pub struct DecodeOutcome {
    pub kind: OutcomeKind,
    pub iterations_used: usize,
    pub decimations_used: usize,
}

pub struct CssCode {
    name: String,
    h_a: BitMatrix,
    h_b: BitMatrix,
    /// Echelon form of h_a's row space; grades stream-b residuals.
    space_a: EchelonForm,
    /// Echelon form of h_b's row space; grades stream-a residuals.
    space_b: EchelonForm,
}

impl CssCode {
    pub fn new(name: impl Into<String>, h_a: BitMatrix, h_b: BitMatrix) -> Result<CssCode> {
        let name = name.into();
        if h_a.cols() != h_b.cols() {
            return Err(Error::InvalidCode(format!(
                "{name}: check matrices disagree on qubit count ({} vs {})",
                h_a.cols(),
                h_b.cols()
            )));
        }
        if !symplectic_check(&h_a, &h_b) {
            return Err(Error::InvalidCode(format!(
                "{name}: row spaces are not orthogonal"
            )));
        }
        let space_a = EchelonForm::new(&h_a);
        let space_b = EchelonForm::new(&h_b);
        Ok(CssCode {
            name,
            h_a,
            h_b,
            space_a,
            space_b,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.h_a.cols()
    }

    pub fn h_a(&self) -> &BitMatrix {
        &self.h_a
    }

    pub fn h_b(&self) -> &BitMatrix {
        &self.h_b
    }

    /// Logical qubit count: n minus both row-space ranks.
    pub fn k(&self) -> usize {
        self.n() - self.space_a.rank() - self.space_b.rank()
    }

    /// True when a stream-a residual is stabilizer-equivalent to zero.
    pub fn residual_trivial_a(&self, r: &BitVec) -> bool {
        assert_eq!(r.len(), self.n(), "residual length mismatch");
        self.space_b.contains(r)
    }

    /// True when a stream-b residual is stabilizer-equivalent to zero.
    pub fn residual_trivial_b(&self, r: &BitVec) -> bool {
        assert_eq!(r.len(), self.n(), "residual length mismatch");
        self.space_a.contains(r)
    }

    /// Grades a stream-a decode against the sampled error.
    pub fn classify_binary(&self, e_true: &BitVec, e_hat: &BitVec, converged: bool) -> OutcomeKind {
        if !converged {
            return OutcomeKind::NonConvergence;
        }
        let mut r = e_true.clone();
        r.xor_assign(e_hat);
        if self.residual_trivial_a(&r) {
            OutcomeKind::Converged
        } else {
            OutcomeKind::LogicalError
        }
    }

    /// Grades a two-stream decode; both residuals must be harmless.
    pub fn classify_quaternary(
        &self,
        e_true: &PauliFrame,
        e_hat: &PauliFrame,
        converged: bool,
    ) -> OutcomeKind {
        if !converged {
            return OutcomeKind::NonConvergence;
        }
        let mut r_a = e_true.e_a.clone();
        r_a.xor_assign(&e_hat.e_a);
        let mut r_b = e_true.e_b.clone();
        r_b.xor_assign(&e_hat.e_b);
        if self.residual_trivial_a(&r_a) && self.residual_trivial_b(&r_b) {
            OutcomeKind::Converged
        } else {
            OutcomeKind::LogicalError
        }
    }
}

impl std::fmt::Debug for CssCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "CssCode({}, n={}, checks={}+{}, k={})",
            self.name,
            self.n(),
            self.h_a.rows(),
            self.h_b.rows(),
            self.k()
        )
    }
}

/// Parsed alist plus the indices of degree-0 columns, which are legal but
/// usually worth a warning upstream.
#[derive(Debug)]
pub struct LoadedAlist {
    pub matrix: BitMatrix,
    pub empty_columns: Vec<usize>,
}

pub fn load_alist(path: &Path) -> Result<LoadedAlist> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading alist {}", path.display()), e))?;
    parse_alist(&text, &path.display().to_string())
}

struct AlistCursor<'a> {
    path: &'a str,
    tokens: Vec<(usize, usize)>,
    pos: usize,
    last_line: usize,
}

impl<'a> AlistCursor<'a> {
    fn fail(&self, line: usize, msg: String) -> Error {
        Error::AlistParse {
            path: self.path.to_string(),
            line,
            msg,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, usize)> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.fail(self.last_line, format!("file ends before {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn left(&self) -> usize {
        self.tokens.len() - self.pos
    }

    fn degree_list(&mut self, count: usize, max: usize, kind: &str) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let (ln, d) = self.next(&format!("degree of {kind} {i}"))?;
            if d > max {
                return Err(self.fail(ln, format!("{kind} degree {d} exceeds stated max {max}")));
            }
            out.push(d);
        }
        Ok(out)
    }

    /// One node's 1-based index list; `take` covers padded widths, zeros
    /// are padding and get dropped.
    fn node_list(&mut self, count: usize, take: usize, limit: usize, what: &str) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..take {
            let (ln, v) = self.next(what)?;
            if v == 0 {
                continue;
            }
            if v > limit {
                return Err(self.fail(ln, format!("{what}: index {v} exceeds {limit}")));
            }
            if out.contains(&(v - 1)) {
                return Err(self.fail(ln, format!("{what}: duplicate index {v}")));
            }
            out.push(v - 1);
        }
        if out.len() != count {
            return Err(self.fail(
                self.last_line,
                format!("{what}: found {} indices, degree says {count}", out.len()),
            ));
        }
        Ok(out)
    }
}

pub fn parse_alist(text: &str, path: &str) -> Result<LoadedAlist> {
    let mut tokens: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| Error::AlistParse {
                path: path.to_string(),
                line: idx + 1,
                msg: format!("expected an integer, found {tok:?}"),
            })?;
            tokens.push((idx + 1, v));
        }
    }
    let mut cur = AlistCursor {
        path,
        last_line: text.lines().count().max(1),
        tokens,
        pos: 0,
    };

    let (_, n) = cur.next("column count")?;
    let (_, m) = cur.next("row count")?;
    let (_, max_col) = cur.next("max column degree")?;
    let (_, max_row) = cur.next("max row degree")?;
    let col_deg = cur.degree_list(n, max_col, "column")?;
    let row_deg = cur.degree_list(m, max_row, "row")?;
    let col_sum: usize = col_deg.iter().sum();
    let row_sum: usize = row_deg.iter().sum();
    if col_sum != row_sum {
        return Err(cur.fail(
            1,
            format!("column degrees sum to {col_sum} but row degrees sum to {row_sum}"),
        ));
    }

    // The index section is either zero-padded to the max degrees or written
    // bare; the leftover token count identifies which.
    let padded_len = n * max_col + m * max_row;
    let bare_len = col_sum + row_sum;
    let padded = if cur.left() == padded_len {
        true
    } else if cur.left() == bare_len {
        false
    } else {
        return Err(cur.fail(
            cur.last_line,
            format!(
                "index section has {} entries; expected {padded_len} (padded) or {bare_len} (bare)",
                cur.left()
            ),
        ));
    };
    let width = |deg: usize, max: usize| if padded { max } else { deg };

    let mut matrix = BitMatrix::zeros(m, n);
    for (i, &d) in col_deg.iter().enumerate() {
        let rows = cur.node_list(d, width(d, max_col), m, &format!("column {i} list"))?;
        for r in rows {
            matrix.set(r, i, true);
        }
    }
    for (j, &d) in row_deg.iter().enumerate() {
        let cols = cur.node_list(d, width(d, max_row), n, &format!("row {j} list"))?;
        let mut claimed = BitVec::zeros(n);
        for c in cols {
            claimed.set(c, true);
        }
        if claimed != matrix.row_vec(j) {
            return Err(cur.fail(
                cur.last_line,
                format!("row {j} list disagrees with the column lists"),
            ));
        }
    }

    let empty_columns = (0..n).filter(|&i| col_deg[i] == 0).collect();
    Ok(LoadedAlist {
        matrix,
        empty_columns,
    })
}

/// Canonical zero-padded alist text for a matrix.
pub fn alist_text(matrix: &BitMatrix) -> String {
    let (m, n) = (matrix.rows(), matrix.cols());
    let col_lists: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).filter(|&j| matrix.get(j, i)).collect())
        .collect();
    let row_lists: Vec<Vec<usize>> = (0..m).map(|j| matrix.ones_in_row(j).collect()).collect();
    let max_col = col_lists.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = row_lists.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let degrees = |lists: &[Vec<usize>]| {
        lists
            .iter()
            .map(|l| l.len().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "{}", degrees(&col_lists));
    let _ = writeln!(out, "{}", degrees(&row_lists));
    let mut node_lines = |lists: &[Vec<usize>], width: usize| {
        for list in lists {
            let mut fields: Vec<String> = list.iter().map(|&x| (x + 1).to_string()).collect();
            fields.resize(width, "0".to_string());
            let _ = writeln!(out, "{}", fields.join(" "));
        }
    };
    node_lines(&col_lists, max_col);
    node_lines(&row_lists, max_row);
    out
}

pub fn write_alist(path: &Path, matrix: &BitMatrix) -> Result<()> {
    fs::write(path, alist_text(matrix))
        .map_err(|e| Error::io(format!("writing alist {}", path.display()), e))
}

/// Bivariate-bicycle construction parameters: matrices A and B are sums of
/// cyclic-shift monomials x^i y^j acting on an l-by-m torus of positions.
#[derive(Clone, Debug)]
pub struct BbParams {
    pub l: usize,
    pub m: usize,
    pub poly_a: Vec<(u32, u32)>,
    pub poly_b: Vec<(u32, u32)>,
}

fn monomial_sum(l: usize, m: usize, poly: &[(u32, u32)], which: &str) -> Result<BitMatrix> {
    let lm = l * m;
    let mut out = BitMatrix::zeros(lm, lm);
    for &(i, j) in poly {
        if i as usize >= l || j as usize >= m {
            return Err(Error::InvalidParam(format!(
                "{which}: monomial x{i}y{j} outside the {l}x{m} torus"
            )));
        }
        for u in 0..l {
            for v in 0..m {
                let r = u * m + v;
                let c = ((u + i as usize) % l) * m + (v + j as usize) % m;
                out.set(r, c, !out.get(r, c));
            }
        }
    }
    Ok(out)
}

/// Builds h_a = [A | B] and h_b = [B^T | A^T]; orthogonality holds because
/// shift monomials commute, and the constructor re-checks it anyway.
pub fn build_bb_code(name: impl Into<String>, params: &BbParams) -> Result<CssCode> {
    if params.l == 0 || params.m == 0 {
        return Err(Error::InvalidParam("torus dimensions must be positive".into()));
    }
    if params.poly_a.is_empty() || params.poly_b.is_empty() {
        return Err(Error::InvalidParam("empty monomial list".into()));
    }
    let lm = params.l * params.m;
    let a = monomial_sum(params.l, params.m, &params.poly_a, "poly_a")?;
    let b = monomial_sum(params.l, params.m, &params.poly_b, "poly_b")?;
    let mut h_a = BitMatrix::zeros(lm, 2 * lm);
    let mut h_b = BitMatrix::zeros(lm, 2 * lm);
    for r in 0..lm {
        for c in 0..lm {
            if a.get(r, c) {
                h_a.set(r, c, true);
                h_b.set(c, lm + r, true);
            }
            if b.get(r, c) {
                h_a.set(r, lm + c, true);
                h_b.set(c, r, true);
            }
        }
    }
    CssCode::new(name, h_a, h_b)
}

/// The [[7,1,3]] code: both streams check with the Hamming matrix.
pub fn steane() -> CssCode {
    let h = BitMatrix::from_rows(&[
        vec![1, 0, 1, 0, 1, 0, 1],
        vec![0, 1, 1, 0, 0, 1, 1],
        vec![0, 0, 0, 1, 1, 1, 1],
    ]);
    CssCode::new("steane", h.clone(), h).expect("fixed construction")
}

/// Distance-d toric code on a d-by-d torus: 2d^2 qubits on edges, faces on
/// one stream and vertices on the other. Horizontal edge (r,c) has index
/// r*d + c, vertical edge (r,c) has index d^2 + r*d + c.
pub fn toric(d: usize) -> CssCode {
    assert!(d >= 2, "torus needs distance at least 2");
    let n = 2 * d * d;
    let h_edge = |r: usize, c: usize| r * d + c;
    let v_edge = |r: usize, c: usize| d * d + r * d + c;
    let mut faces = BitMatrix::zeros(d * d, n);
    let mut vertices = BitMatrix::zeros(d * d, n);
    for r in 0..d {
        for c in 0..d {
            let j = r * d + c;
            faces.set(j, h_edge(r, c), true);
            faces.set(j, h_edge((r + 1) % d, c), true);
            faces.set(j, v_edge(r, c), true);
            faces.set(j, v_edge(r, (c + 1) % d), true);
            vertices.set(j, h_edge(r, c), true);
            vertices.set(j, h_edge(r, (c + d - 1) % d), true);
            vertices.set(j, v_edge(r, c), true);
            vertices.set(j, v_edge((r + d - 1) % d, c), true);
        }
    }
    CssCode::new(format!("toric{d}"), faces, vertices).expect("fixed construction")
}

/// Desk-scale fixtures for tests and quick runs.
pub fn toy_codes() -> Vec<CssCode> {
    vec![steane(), toric(3)]
}

/// Resolves a registry name: "steane" or "toric<d>" with d >= 2.
pub fn registry_code(name: &str) -> Option<CssCode> {
    if name == "steane" {
        return Some(steane());
    }
    if let Some(d) = name.strip_prefix("toric") {
        if let Ok(d) = d.parse::<usize>() {
            if (2..=64).contains(&d) {
                return Some(toric(d));
            }
        }
    }
    None
}

/// On-disk pointer to a code: a name, the expected shape, and one alist
/// path per stream. Paths are kept as written; relative ones resolve
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeManifest {
    pub name: String,
    pub n: usize,
    pub checks_a: usize,
    pub checks_b: usize,
    pub alist_a: PathBuf,
    pub alist_b: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<CodeManifest> {
    let fail = |msg: String| Error::Manifest {
        path: path.to_path_buf(),
        msg,
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
    let mut fields: Vec<(String, String)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail(format!("line {}: expected key = value", idx + 1)))?;
        fields.push((key.trim().to_string(), value.trim().to_string()));
    }
    let lookup = |key: &str| -> Result<&str> {
        let mut hits = fields.iter().filter(|(k, _)| k == key);
        let first = hits
            .next()
            .ok_or_else(|| fail(format!("missing key {key:?}")))?;
        if hits.next().is_some() {
            return Err(fail(format!("duplicate key {key:?}")));
        }
        Ok(&first.1)
    };
    let count = |key: &str| -> Result<usize> {
        lookup(key)?
            .parse()
            .map_err(|_| fail(format!("key {key:?} is not a count")))
    };
    Ok(CodeManifest {
        name: lookup("name")?.to_string(),
        n: count("n")?,
        checks_a: count("checks_a")?,
        checks_b: count("checks_b")?,
        alist_a: PathBuf::from(lookup("alist_a")?),
        alist_b: PathBuf::from(lookup("alist_b")?),
    })
}

/// Loads the code a manifest points at, checking the stated shape and the
/// orthogonality invariant. Degree-0 columns on either stream are allowed.
pub fn load_manifest_code(path: &Path) -> Result<CssCode> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let fail = |msg: String| Error::Manifest {
        path: path.to_path_buf(),
        msg,
    };
    let a = load_alist(&resolve(&manifest.alist_a))?;
    let b = load_alist(&resolve(&manifest.alist_b))?;
    let shape = [
        (a.matrix.cols(), manifest.n, "stream-a qubit count"),
        (b.matrix.cols(), manifest.n, "stream-b qubit count"),
        (a.matrix.rows(), manifest.checks_a, "stream-a check count"),
        (b.matrix.rows(), manifest.checks_b, "stream-b check count"),
    ];
    for (got, want, what) in shape {
        if got != want {
            return Err(fail(format!("{what} is {got}, manifest says {want}")));
        }
    }
    CssCode::new(manifest.name, a.matrix, b.matrix)
}

/// Writes `<name>_a.alist`, `<name>_b.alist` and `<name>.manifest` into a
/// directory and returns the manifest path.
pub fn save_code(dir: &Path, code: &CssCode) -> Result<PathBuf> {
    let stem: String = code
        .name()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '-' })
        .collect();
    let a_name = format!("{stem}_a.alist");
    let b_name = format!("{stem}_b.alist");
    write_alist(&dir.join(&a_name), code.h_a())?;
    write_alist(&dir.join(&b_name), code.h_b())?;
    let manifest = format!(
        "name = {}\nn = {}\nchecks_a = {}\nchecks_b = {}\nalist_a = {}\nalist_b = {}\n",
        code.name(),
        code.n(),
        code.h_a().rows(),
        code.h_b().rows(),
        a_name,
        b_name,
    );
    let manifest_path = dir.join(format!("{stem}.manifest"));
    fs::write(&manifest_path, manifest)
        .map_err(|e| Error::io(format!("writing manifest {}", manifest_path.display()), e))?;
    Ok(manifest_path)
}
