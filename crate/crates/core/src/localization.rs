//! κ, localizable symmetries, R_k(g), logical observables T(g) and the readout subgroup H.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::Coord;
use crate::models::SymmetryCatalog;
use crate::pauli::{maximal_isotropic_indices, BinaryForm, Letter, PauliOperator};

const BETA_ORDER: [Letter; 4] = [Letter::Z, Letter::X, Letter::Y, Letter::I];

/// κ over the catalog generators, from left boundary actions, cross-checked on the right.
pub fn kappa(cat: &SymmetryCatalog) -> Result<BinaryForm> {
    let gens = cat.generators();
    let m = gens.len();
    let left = BinaryForm::from_fn(m, |i, j| gens[i].v_l.anticommutes_with(&gens[j].v_l));
    let right = BinaryForm::from_fn(m, |i, j| gens[i].v_r.anticommutes_with(&gens[j].v_r));
    if left != right {
        return Err(Error::MalformedCatalog("V_L- and V_R-derived κ differ".into()));
    }
    Ok(left)
}

/// κ between two labels (derived labels expand over generators).
pub fn kappa_labels(cat: &SymmetryCatalog, form: &BinaryForm, a: &str, b: &str) -> Result<bool> {
    Ok(form.eval(&cat.expand(a)?, &cat.expand(b)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct Localized {
    pub label: String,
    pub beta: PauliOperator,
    pub r: PauliOperator,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationEntry {
    pub site: Coord,
    pub qubit: usize,
    pub localizable: Vec<Localized>,
}

impl LocalizationEntry {
    pub fn get(&self, label: &str) -> Option<&Localized> {
        self.localizable.iter().find(|l| l.label == label)
    }
}

fn site_qubit(cat: &SymmetryCatalog, site: Coord) -> Result<usize> {
    cat.sites.iter().position(|c| *c == site).ok_or_else(|| Error::Domain(format!("site {site} not on lattice")))
}

fn single_beta(cat: &SymmetryCatalog, form: &BinaryForm, q: usize, label: &str) -> Result<Option<Letter>> {
    let gens = cat.generators();
    let g = cat.expand(label)?;
    'outer: for beta in BETA_ORDER {
        for (j, gp) in gens.iter().enumerate() {
            let mut e = vec![false; gens.len()];
            e[j] = true;
            let want = form.eval(&g, &e);
            if gp.u.letter(q).anticommutes(beta) != want {
                continue 'outer;
            }
        }
        return Ok(Some(beta));
    }
    Ok(None)
}

/// R_k(g) = β_k ⊗ U_{>k}(g), with {>k} the sites strictly right of the column of `q`.
pub fn r_operator(cat: &SymmetryCatalog, q: usize, label: &str, beta: Letter) -> Result<PauliOperator> {
    let u = &cat.entry(label)?.u;
    let x2 = cat.sites[q].x2;
    let right = u.restrict(|j| cat.sites[j].x2 > x2);
    let b = PauliOperator::single(cat.n_qubits, q, beta);
    Ok((&b * &right).normalized())
}

pub fn localize(cat: &SymmetryCatalog, form: &BinaryForm, site: Coord) -> Result<LocalizationEntry> {
    let q = site_qubit(cat, site)?;
    if !cat.is_bulk(q) {
        return Err(Error::Domain(format!("site {site} lies on a boundary column")));
    }
    let mut localizable = Vec::new();
    for e in &cat.entries {
        if let Some(beta) = single_beta(cat, form, q, &e.label)? {
            let r = r_operator(cat, q, &e.label, beta)?;
            if cat.entries.iter().all(|o| o.u.commutes_with(&r)) {
                localizable.push(Localized { label: e.label.clone(), beta: PauliOperator::single(cat.n_qubits, q, beta), r });
            }
        }
    }
    Ok(LocalizationEntry { site, qubit: q, localizable })
}

pub fn build_r(cat: &SymmetryCatalog, form: &BinaryForm, site: Coord, label: &str) -> Result<PauliOperator> {
    let entry = localize(cat, form, site)?;
    entry
        .get(label)
        .map(|l| l.r.clone())
        .ok_or_else(|| Error::NotLocalizable { label: label.into(), site: site.to_string() })
}

/// Localization table over every bulk site, skipping sites where nothing localizes.
pub fn localization_table(cat: &SymmetryCatalog, form: &BinaryForm) -> Result<Vec<LocalizationEntry>> {
    let mut out = Vec::new();
    for q in 0..cat.n_qubits {
        if cat.is_bulk(q) {
            let e = localize(cat, form, cat.sites[q])?;
            if !e.localizable.is_empty() {
                out.push(e);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LogicalSet {
    pub t: BTreeMap<String, PauliOperator>,
    pub h_subgroup: Vec<String>,
    pub init_values: BTreeMap<String, i8>,
    /// Generator labels in catalog order, the coordinates of label vectors.
    pub generators: Vec<String>,
    pub form: BinaryForm,
}

impl LogicalSet {
    pub fn rank_h(&self) -> usize {
        self.h_subgroup.len()
    }

    pub fn in_h(&self, cat: &SymmetryCatalog, label: &str) -> Result<bool> {
        let v = cat.expand(label)?;
        Ok(v.iter().zip(&self.generators).all(|(b, g)| !*b || self.h_subgroup.contains(g)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "T": self.t.iter().map(|(k, v)| (k.clone(), v.to_text())).collect::<BTreeMap<_, _>>(),
            "H": self.h_subgroup,
            "init": self.init_values,
        })
    }
}

pub fn logical_observables(cat: &SymmetryCatalog) -> Result<LogicalSet> {
    let form = kappa(cat)?;
    let gens = cat.generators();
    let h: Vec<String> = maximal_isotropic_indices(&form).into_iter().map(|i| gens[i].label.clone()).collect();
    let generators: Vec<String> = gens.iter().map(|g| g.label.clone()).collect();
    let mut t = BTreeMap::new();
    let mut init = BTreeMap::new();
    let mut ls = LogicalSet { t: BTreeMap::new(), h_subgroup: h, init_values: BTreeMap::new(), generators, form };
    for e in &cat.entries {
        if ls.in_h(cat, &e.label)? {
            t.insert(e.label.clone(), e.u.clone());
            init.insert(e.label.clone(), if e.chi == 0 { 1 } else { -1 });
        } else {
            let lx = cat.left_x2;
            t.insert(e.label.clone(), e.u.restrict(|q| Some(cat.sites[q].x2) != lx));
            init.insert(e.label.clone(), 0);
        }
    }
    ls.t = t;
    ls.init_values = init;
    Ok(ls)
}

/// L_k(g) = T(g) R_k(g).
pub fn l_operator(ls: &LogicalSet, label: &str, r: &PauliOperator) -> Result<PauliOperator> {
    let t = ls.t.get(label).ok_or_else(|| Error::Domain(format!("no logical for {label}")))?;
    Ok(t * r)
}
