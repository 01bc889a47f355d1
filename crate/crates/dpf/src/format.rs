//! Versioned plain-text formats for tensors, fitted checkpoints and
//! simulated ground truth.
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! reading a file and writing it back reproduces it byte for byte.
//!
//! Tensor (`dpf-tensor 1`):
//! ```text
//! dpf-tensor 1
//! <N> <M> <T> <nnz>
//! <step>\t<user>\t<item>\t<count>      (nnz lines)
//! ```
//!
//! Checkpoint (`dpf-checkpoint 1`):
//! ```text
//! dpf-checkpoint 1
//! dims <N> <M> <T> <K>
//! hyper <mu_u> <sigma_u> <mu_v> <sigma_v> <mu_ubar> <sigma_ubar> <mu_vbar> <sigma_vbar>
//! users <N>            then N id lines
//! items <M>            then M id lines
//! elbo <len>           then one value per line
//! user_dyn <N*T*K>     then `<mean>\t<log_sd>` lines, index (n*T + t)*K + k
//! item_dyn <M*T*K>
//! user_glob <N*K>      index n*K + k
//! item_glob <M*K>
//! end
//! ```
//!
//! Latent ground truth (`dpf-latent 1`): `dims`, then sections `u`, `v`,
//! `ubar`, `vbar` with one value per line in the same layouts, then `end`.

use std::io::{BufRead, Write};

use dpf_core::inference::GaussianField;
use dpf_core::ingest::IdMap;
use dpf_core::{Entry, Hyperparams, InteractionTensor, LatentState, VariationalState};

use crate::error::{Error, Result};

const TENSOR_MAGIC: &str = "dpf-tensor 1";
const CHECKPOINT_MAGIC: &str = "dpf-checkpoint 1";
const LATENT_MAGIC: &str = "dpf-latent 1";

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self { inner: r.lines(), line: 0 }
    }

    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(Error::parse(self.line, "unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(self.err(format!("expected {want:?}, found {got:?}")));
        }
        Ok(())
    }

    /// A `<tag> <values...>` line.
    fn tagged(&mut self, tag: &str) -> Result<Vec<String>> {
        let line = self.next()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(tag) {
            return Err(self.err(format!("expected section {tag:?}, found {line:?}")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn tagged_len(&mut self, tag: &str, want: usize) -> Result<()> {
        let v = self.tagged(tag)?;
        let n: usize = parse(self, v.first().map(String::as_str).unwrap_or(""))?;
        if n != want {
            return Err(self.err(format!("section {tag} has {n} rows, expected {want}")));
        }
        Ok(())
    }

    fn float(&mut self) -> Result<f64> {
        let l = self.next()?;
        parse(self, &l)
    }
}

fn parse<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, s: &str) -> Result<T> {
    s.parse().map_err(|_| lines.err(format!("cannot parse {s:?}")))
}

pub fn write_tensor<W: Write>(mut w: W, t: &InteractionTensor) -> Result<()> {
    writeln!(w, "{TENSOR_MAGIC}")?;
    writeln!(w, "{} {} {} {}", t.n_users(), t.n_items(), t.n_steps(), t.nnz())?;
    for e in t.entries() {
        writeln!(w, "{}\t{}\t{}\t{}", e.step, e.user, e.item, e.count)?;
    }
    Ok(())
}

pub fn read_tensor<R: BufRead>(r: R) -> Result<InteractionTensor> {
    let mut lines = Lines::new(r);
    lines.expect(TENSOR_MAGIC)?;
    let header = lines.next()?;
    let dims: Vec<usize> = header.split(' ').map(|s| parse(&lines, s)).collect::<Result<_>>()?;
    let [n, m, t, nnz] = dims[..] else {
        return Err(lines.err("expected `N M T nnz`"));
    };
    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let l = lines.next()?;
        let f: Vec<u32> = l.split('\t').map(|s| parse(&lines, s)).collect::<Result<_>>()?;
        let [step, user, item, count] = f[..] else {
            return Err(lines.err("expected 4 fields"));
        };
        entries.push(Entry { step, user, item, count });
    }
    Ok(InteractionTensor::from_entries(n, m, t, entries)?)
}

/// A fitted model with everything needed to score and export it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hp: Hyperparams,
    pub users: IdMap,
    pub items: IdMap,
    pub state: VariationalState,
    pub elbo_trace: Vec<f64>,
}

fn write_field<W: Write>(w: &mut W, tag: &str, f: &GaussianField) -> Result<()> {
    writeln!(w, "{tag} {}", f.len())?;
    for (m, s) in f.mean.iter().zip(&f.log_sd) {
        writeln!(w, "{m:?}\t{s:?}")?;
    }
    Ok(())
}

fn read_field<R: BufRead>(lines: &mut Lines<R>, tag: &str, len: usize) -> Result<GaussianField> {
    lines.tagged_len(tag, len)?;
    let mut f = GaussianField { mean: Vec::with_capacity(len), log_sd: Vec::with_capacity(len) };
    for _ in 0..len {
        let l = lines.next()?;
        let (a, b) = l.split_once('\t').ok_or_else(|| lines.err("expected `mean\\tlog_sd`"))?;
        f.mean.push(parse(lines, a)?);
        f.log_sd.push(parse(lines, b)?);
    }
    Ok(f)
}

fn write_ids<W: Write>(w: &mut W, tag: &str, ids: &IdMap) -> Result<()> {
    writeln!(w, "{tag} {}", ids.len())?;
    for id in ids.ids() {
        writeln!(w, "{id}")?;
    }
    Ok(())
}

fn read_ids<R: BufRead>(lines: &mut Lines<R>, tag: &str, len: usize) -> Result<IdMap> {
    lines.tagged_len(tag, len)?;
    let ids = (0..len).map(|_| lines.next()).collect::<Result<Vec<_>>>()?;
    IdMap::from_ids(ids).map_err(|e| lines.err(e.to_string()))
}

impl Checkpoint {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.state;
        let hp = &self.hp;
        if self.users.len() != s.n_users || self.items.len() != s.n_items || hp.k != s.k {
            return Err(Error::Format("checkpoint id maps or K do not match the state".into()));
        }
        writeln!(w, "{CHECKPOINT_MAGIC}")?;
        writeln!(w, "dims {} {} {} {}", s.n_users, s.n_items, s.n_steps, s.k)?;
        writeln!(
            w,
            "hyper {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?}",
            hp.mu_u, hp.sigma_u, hp.mu_v, hp.sigma_v, hp.mu_ubar, hp.sigma_ubar, hp.mu_vbar, hp.sigma_vbar
        )?;
        write_ids(&mut w, "users", &self.users)?;
        write_ids(&mut w, "items", &self.items)?;
        writeln!(w, "elbo {}", self.elbo_trace.len())?;
        for v in &self.elbo_trace {
            writeln!(w, "{v:?}")?;
        }
        write_field(&mut w, "user_dyn", &s.user_dyn)?;
        write_field(&mut w, "item_dyn", &s.item_dyn)?;
        write_field(&mut w, "user_glob", &s.user_glob)?;
        write_field(&mut w, "item_glob", &s.item_glob)?;
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = Lines::new(r);
        lines.expect(CHECKPOINT_MAGIC)?;
        let d = lines.tagged("dims")?;
        let dims: Vec<usize> = d.iter().map(|s| parse(&lines, s)).collect::<Result<_>>()?;
        let [n, m, t, k] = dims[..] else {
            return Err(lines.err("expected `dims N M T K`"));
        };
        let h = lines.tagged("hyper")?;
        let hv: Vec<f64> = h.iter().map(|s| parse(&lines, s)).collect::<Result<_>>()?;
        let [mu_u, sigma_u, mu_v, sigma_v, mu_ubar, sigma_ubar, mu_vbar, sigma_vbar] = hv[..] else {
            return Err(lines.err("expected 8 hyperparameters"));
        };
        let hp = Hyperparams { k, mu_u, sigma_u, mu_v, sigma_v, mu_ubar, sigma_ubar, mu_vbar, sigma_vbar };
        let users = read_ids(&mut lines, "users", n)?;
        let items = read_ids(&mut lines, "items", m)?;
        let e = lines.tagged("elbo")?;
        let len: usize = parse(&lines, e.first().map(String::as_str).unwrap_or(""))?;
        let elbo_trace = (0..len).map(|_| lines.float()).collect::<Result<Vec<_>>>()?;
        let state = VariationalState {
            n_users: n,
            n_items: m,
            n_steps: t,
            k,
            user_dyn: read_field(&mut lines, "user_dyn", n * t * k)?,
            item_dyn: read_field(&mut lines, "item_dyn", m * t * k)?,
            user_glob: read_field(&mut lines, "user_glob", n * k)?,
            item_glob: read_field(&mut lines, "item_glob", m * k)?,
        };
        lines.expect("end")?;
        Ok(Self { hp, users, items, state, elbo_trace })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

pub fn write_latent<W: Write>(mut w: W, s: &LatentState) -> Result<()> {
    writeln!(w, "{LATENT_MAGIC}")?;
    writeln!(w, "dims {} {} {} {}", s.n_users, s.n_items, s.n_steps, s.k)?;
    for (tag, values) in [("u", &s.u), ("v", &s.v), ("ubar", &s.ubar), ("vbar", &s.vbar)] {
        writeln!(w, "{tag} {}", values.len())?;
        for v in values.iter() {
            writeln!(w, "{v:?}")?;
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_latent<R: BufRead>(r: R) -> Result<LatentState> {
    let mut lines = Lines::new(r);
    lines.expect(LATENT_MAGIC)?;
    let d = lines.tagged("dims")?;
    let dims: Vec<usize> = d.iter().map(|s| parse(&lines, s)).collect::<Result<_>>()?;
    let [n, m, t, k] = dims[..] else {
        return Err(lines.err("expected `dims N M T K`"));
    };
    let mut section = |tag: &str, len: usize| -> Result<Vec<f64>> {
        lines.tagged_len(tag, len)?;
        (0..len).map(|_| lines.float()).collect()
    };
    let u = section("u", n * t * k)?;
    let v = section("v", m * t * k)?;
    let ubar = section("ubar", n * k)?;
    let vbar = section("vbar", m * k)?;
    lines.expect("end")?;
    Ok(LatentState { n_users: n, n_items: m, n_steps: t, k, u, v, ubar, vbar })
}
