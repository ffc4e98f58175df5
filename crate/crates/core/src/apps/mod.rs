//! Application front-ends: indivisible-goods allocation, giveaway lotteries,
//! participatory budgeting, and explicitly listed state tables.
//!
//! Every outcome has a canonical byte handle: a kind tag followed by
//! big-endian `u32` ids (the owner of each good, or the sorted admitted
//! groups / funded projects, or the row index). Empty group and project sets
//! are the degenerate state.

pub mod solvers;

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::blackbox::{BlackBoxError, WeightVector};
use crate::model::{Outcome, StateHandle, StateRecord, UtilityVector};

pub use solvers::{build_blackbox, SolverChoice};

/// Default limit on the number of states [`Instance::enumerate`] will list.
pub const ENUMERATION_CAP: usize = 5000;

const TAG_ALLOCATION: u8 = 1;
const TAG_GIVEAWAY: u8 = 2;
const TAG_BUDGET: u8 = 3;
const TAG_EXPLICIT: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("field `{field}`: {message}")]
    Invariant { field: String, message: String },
    #[error("solver `{solver}` does not apply to {kind} instances")]
    Incompatible { solver: String, kind: &'static str },
    #[error("state {0} does not belong to this instance")]
    ForeignHandle(String),
    #[error("more than {cap} states; raise the enumeration cap or shrink the instance")]
    CapExceeded { cap: usize },
    #[error(transparent)]
    BlackBox(#[from] BlackBoxError),
}

impl AppError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Weighted coverage utility: a bundle is worth the total weight of the
/// ground elements covered by at least one of its goods.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageUtility {
    pub weights: Vec<f64>,
    /// `covers[g]` lists the ground elements good `g` covers.
    pub covers: Vec<Vec<usize>>,
}

impl CoverageUtility {
    pub fn value(&self, bundle: &[usize]) -> f64 {
        let covered: BTreeSet<usize> = bundle.iter().flat_map(|&g| self.covers[g].iter().copied()).collect();
        covered.iter().map(|&e| self.weights[e]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AllocationUtilities {
    /// `values[i][g]`: agent `i`'s value for good `g`.
    Additive(Vec<Vec<f64>>),
    Coverage(Vec<CoverageUtility>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationInstance {
    pub agents: usize,
    pub goods: usize,
    pub utilities: AllocationUtilities,
}

impl AllocationInstance {
    pub fn new(agents: usize, goods: usize, utilities: AllocationUtilities) -> Result<Self, AppError> {
        if agents == 0 {
            return Err(AppError::invariant("agents", "need at least one agent"));
        }
        match &utilities {
            AllocationUtilities::Additive(values) => {
                check_matrix("values", values, agents, goods)?;
            }
            AllocationUtilities::Coverage(specs) => {
                if specs.len() != agents {
                    return Err(AppError::invariant("coverage", format!("expected {agents} entries, got {}", specs.len())));
                }
                for (i, spec) in specs.iter().enumerate() {
                    check_row(&format!("coverage[{i}].weights"), &spec.weights)?;
                    if spec.covers.len() != goods {
                        return Err(AppError::invariant(
                            format!("coverage[{i}].covers"),
                            format!("expected {goods} entries, got {}", spec.covers.len()),
                        ));
                    }
                    for (g, list) in spec.covers.iter().enumerate() {
                        if let Some(&e) = list.iter().find(|&&e| e >= spec.weights.len()) {
                            return Err(AppError::invariant(
                                format!("coverage[{i}].covers[{g}]"),
                                format!("element {e} is outside the ground set of size {}", spec.weights.len()),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Self { agents, goods, utilities })
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.utilities, AllocationUtilities::Additive(_))
    }

    /// Agent `i`'s utility for a bundle of goods.
    pub fn value(&self, agent: usize, bundle: &[usize]) -> f64 {
        match &self.utilities {
            AllocationUtilities::Additive(values) => bundle.iter().map(|&g| values[agent][g]).sum(),
            AllocationUtilities::Coverage(specs) => specs[agent].value(bundle),
        }
    }

    pub fn bundles(&self, owner: &[usize]) -> Vec<Vec<usize>> {
        let mut bundles = vec![Vec::new(); self.agents];
        for (g, &i) in owner.iter().enumerate() {
            bundles[i].push(g);
        }
        bundles
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GiveawayInstance {
    /// Size of each group; group `i` is agent `i`.
    pub sizes: Vec<u64>,
    pub capacity: u64,
}

impl GiveawayInstance {
    pub fn new(sizes: Vec<u64>, capacity: u64) -> Result<Self, AppError> {
        if sizes.is_empty() {
            return Err(AppError::invariant("sizes", "need at least one group"));
        }
        if capacity == 0 {
            return Err(AppError::invariant("capacity", "must be positive"));
        }
        for (i, &w) in sizes.iter().enumerate() {
            if w == 0 {
                return Err(AppError::invariant(format!("sizes[{i}]"), "must be positive"));
            }
            if w > capacity {
                return Err(AppError::invariant(
                    format!("sizes[{i}]"),
                    format!("group exceeds capacity ({w} > {capacity})"),
                ));
            }
        }
        let total: u64 = sizes.iter().sum();
        if total <= capacity {
            return Err(AppError::invariant(
                "sizes",
                format!("total size {total} fits within capacity {capacity}; every group can be admitted"),
            ));
        }
        Ok(Self { sizes, capacity })
    }

    pub fn load(&self, groups: &[usize]) -> u64 {
        groups.iter().map(|&g| self.sizes[g]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetInstance {
    pub costs: Vec<u64>,
    pub budget: u64,
    /// `utilities[voter][project]`.
    pub utilities: Vec<Vec<f64>>,
}

impl BudgetInstance {
    pub fn new(costs: Vec<u64>, budget: u64, utilities: Vec<Vec<f64>>) -> Result<Self, AppError> {
        if budget == 0 {
            return Err(AppError::invariant("budget", "must be positive"));
        }
        if let Some(i) = costs.iter().position(|&c| c == 0) {
            return Err(AppError::invariant(format!("costs[{i}]"), "must be positive"));
        }
        if utilities.is_empty() {
            return Err(AppError::invariant("utilities", "need at least one voter"));
        }
        check_matrix("utilities", &utilities, utilities.len(), costs.len())?;
        Ok(Self { costs, budget, utilities })
    }

    pub fn cost(&self, projects: &[usize]) -> u64 {
        projects.iter().map(|&p| self.costs[p]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitInstance {
    pub agents: usize,
    /// Utility column of each listed state.
    pub states: Vec<Vec<f64>>,
}

impl ExplicitInstance {
    pub fn new(agents: usize, states: Vec<Vec<f64>>) -> Result<Self, AppError> {
        if agents == 0 {
            return Err(AppError::invariant("agents", "need at least one agent"));
        }
        check_matrix("states", &states, states.len(), agents)?;
        Ok(Self { agents, states })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Allocation(AllocationInstance),
    Giveaway(GiveawayInstance),
    Budget(BudgetInstance),
    Explicit(ExplicitInstance),
}

fn check_row(field: &str, row: &[f64]) -> Result<(), AppError> {
    for (k, &v) in row.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(AppError::invariant(format!("{field}[{k}]"), format!("must be finite and non-negative, got {v}")));
        }
    }
    Ok(())
}

fn check_matrix(field: &str, rows: &[Vec<f64>], len: usize, width: usize) -> Result<(), AppError> {
    if rows.len() != len {
        return Err(AppError::invariant(field, format!("expected {len} rows, got {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(AppError::invariant(
                format!("{field}[{i}]"),
                format!("expected {width} entries, got {}", row.len()),
            ));
        }
        check_row(&format!("{field}[{i}]"), row)?;
    }
    Ok(())
}

fn encode_ids(tag: u8, ids: &[usize]) -> StateHandle {
    let mut bytes = Vec::with_capacity(1 + 4 * ids.len());
    bytes.push(tag);
    for &id in ids {
        bytes.extend_from_slice(&(id as u32).to_be_bytes());
    }
    StateHandle::from_bytes(bytes)
}

fn decode_ids(bytes: &[u8]) -> Option<Vec<usize>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect(),
    )
}

fn strictly_increasing(ids: &[usize]) -> bool {
    ids.windows(2).all(|w| w[0] < w[1])
}

fn id_set(ids: &[usize]) -> String {
    let inner: Vec<String> = ids.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Allocation(_) => "allocation",
            Self::Giveaway(_) => "giveaway",
            Self::Budget(_) => "budget",
            Self::Explicit(_) => "explicit",
        }
    }

    pub fn agents(&self) -> usize {
        match self {
            Self::Allocation(a) => a.agents,
            Self::Giveaway(g) => g.sizes.len(),
            Self::Budget(b) => b.utilities.len(),
            Self::Explicit(e) => e.agents,
        }
    }

    /// Whether `outcome` is a state of this instance.
    pub fn is_feasible(&self, outcome: &Outcome) -> bool {
        match (self, outcome) {
            (_, Outcome::Empty) => true,
            (Self::Allocation(a), Outcome::Allocation { owner }) => {
                owner.len() == a.goods && owner.iter().all(|&i| i < a.agents)
            }
            (Self::Giveaway(g), Outcome::Admitted { groups }) => {
                strictly_increasing(groups)
                    && groups.iter().all(|&i| i < g.sizes.len())
                    && g.load(groups) <= g.capacity
            }
            (Self::Budget(b), Outcome::Funded { projects }) => {
                strictly_increasing(projects)
                    && projects.iter().all(|&p| p < b.costs.len())
                    && b.cost(projects) <= b.budget
            }
            (Self::Explicit(e), Outcome::Listed { index }) => *index < e.states.len(),
            _ => false,
        }
    }

    /// Per-agent utilities of a feasible outcome.
    pub fn utilities(&self, outcome: &Outcome) -> Vec<f64> {
        let n = self.agents();
        match (self, outcome) {
            (Self::Allocation(a), Outcome::Allocation { owner }) => {
                let bundles = a.bundles(owner);
                (0..n).map(|i| a.value(i, &bundles[i])).collect()
            }
            (Self::Giveaway(_), Outcome::Admitted { groups }) => {
                let mut u = vec![0.0; n];
                for &g in groups {
                    u[g] = 1.0;
                }
                u
            }
            (Self::Budget(b), Outcome::Funded { projects }) => b
                .utilities
                .iter()
                .map(|row| projects.iter().map(|&p| row[p]).sum())
                .collect(),
            (Self::Explicit(e), Outcome::Listed { index }) => e.states[*index].clone(),
            _ => vec![0.0; n],
        }
    }

    /// Canonical handle of `outcome`, or `None` if it is not feasible here.
    pub fn encode(&self, outcome: &Outcome) -> Option<StateHandle> {
        if !self.is_feasible(outcome) {
            return None;
        }
        Some(match outcome {
            Outcome::Empty => StateHandle::degenerate(),
            Outcome::Allocation { owner } => encode_ids(TAG_ALLOCATION, owner),
            Outcome::Admitted { groups } if groups.is_empty() => StateHandle::degenerate(),
            Outcome::Admitted { groups } => encode_ids(TAG_GIVEAWAY, groups),
            Outcome::Funded { projects } if projects.is_empty() => StateHandle::degenerate(),
            Outcome::Funded { projects } => encode_ids(TAG_BUDGET, projects),
            Outcome::Listed { index } => encode_ids(TAG_EXPLICIT, &[*index]),
        })
    }

    /// Inverse of [`Instance::encode`].
    pub fn decode_handle(&self, handle: &StateHandle) -> Result<Outcome, AppError> {
        let foreign = || AppError::ForeignHandle(handle.to_hex());
        let bytes = handle.as_bytes();
        let Some((&tag, rest)) = bytes.split_first() else {
            return Ok(Outcome::Empty);
        };
        let ids = decode_ids(rest).ok_or_else(foreign)?;
        let outcome = match (self, tag) {
            (Self::Allocation(_), TAG_ALLOCATION) => Outcome::Allocation { owner: ids },
            (Self::Giveaway(_), TAG_GIVEAWAY) if !ids.is_empty() => Outcome::Admitted { groups: ids },
            (Self::Budget(_), TAG_BUDGET) if !ids.is_empty() => Outcome::Funded { projects: ids },
            (Self::Explicit(_), TAG_EXPLICIT) if ids.len() == 1 => Outcome::Listed { index: ids[0] },
            _ => return Err(foreign()),
        };
        if !self.is_feasible(&outcome) {
            return Err(foreign());
        }
        Ok(outcome)
    }

    /// Builds the state record of a feasible outcome. Outcomes that are the
    /// degenerate state (empty sets) come back as the degenerate record.
    pub fn record(&self, outcome: &Outcome) -> Option<StateRecord> {
        let handle = self.encode(outcome)?;
        if handle.is_degenerate() {
            return Some(StateRecord::degenerate(self.agents()));
        }
        let utilities = UtilityVector::new(self.utilities(outcome)).expect("validated instance has non-negative utilities");
        Some(StateRecord {
            handle,
            utilities,
            payload: outcome.clone(),
        })
    }

    /// Decodes a state record produced for this instance, checking that its
    /// payload and utility column agree with the handle.
    pub fn decode_state(&self, record: &StateRecord) -> Result<Outcome, AppError> {
        let outcome = self.decode_handle(&record.handle)?;
        let expected = self.record(&outcome).ok_or_else(|| AppError::ForeignHandle(record.handle.to_hex()))?;
        if expected.utilities != record.utilities || (!record.is_degenerate() && expected.payload != record.payload) {
            return Err(AppError::ForeignHandle(record.handle.to_hex()));
        }
        Ok(outcome)
    }

    /// Human-readable form of an outcome; ids are 1-based.
    pub fn describe(&self, outcome: &Outcome) -> String {
        match (self, outcome) {
            (_, Outcome::Empty) => "empty outcome".to_string(),
            (Self::Giveaway(_), Outcome::Admitted { groups }) if groups.is_empty() => "empty outcome".to_string(),
            (Self::Budget(_), Outcome::Funded { projects }) if projects.is_empty() => "empty outcome".to_string(),
            (Self::Allocation(_), Outcome::Allocation { owner }) => {
                let parts: Vec<String> = owner
                    .iter()
                    .enumerate()
                    .map(|(g, i)| format!("good {} -> agent {}", g + 1, i + 1))
                    .collect();
                parts.join(", ")
            }
            (Self::Giveaway(g), Outcome::Admitted { groups }) => {
                format!("groups {} admitted, load {}/{}", id_set(groups), g.load(groups), g.capacity)
            }
            (Self::Budget(b), Outcome::Funded { projects }) => {
                format!("projects {} funded, cost {}/{}", id_set(projects), b.cost(projects), b.budget)
            }
            (Self::Explicit(_), Outcome::Listed { index }) => format!("state {}", index + 1),
            _ => "foreign outcome".to_string(),
        }
    }

    /// Every state of the instance, including the degenerate one, sorted by
    /// handle.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<StateRecord>, AppError> {
        let mut out = vec![StateRecord::degenerate(self.agents())];
        let push = |outcome: Outcome, out: &mut Vec<StateRecord>| -> Result<(), AppError> {
            if let Some(r) = self.record(&outcome) {
                if !r.is_degenerate() {
                    out.push(r);
                }
            }
            if out.len() > cap {
                return Err(AppError::CapExceeded { cap });
            }
            Ok(())
        };
        match self {
            Self::Allocation(a) => {
                let total = (a.agents as f64).powi(a.goods as i32);
                if total + 1.0 > cap as f64 {
                    return Err(AppError::CapExceeded { cap });
                }
                let mut owner = vec![0usize; a.goods];
                loop {
                    push(Outcome::Allocation { owner: owner.clone() }, &mut out)?;
                    let mut g = 0;
                    while g < a.goods && owner[g] + 1 == a.agents {
                        owner[g] = 0;
                        g += 1;
                    }
                    if g == a.goods {
                        break;
                    }
                    owner[g] += 1;
                }
            }
            Self::Giveaway(g) => {
                for mask in subsets(g.sizes.len(), cap)? {
                    push(Outcome::Admitted { groups: mask }, &mut out)?;
                }
            }
            Self::Budget(b) => {
                for mask in subsets(b.costs.len(), cap)? {
                    push(Outcome::Funded { projects: mask }, &mut out)?;
                }
            }
            Self::Explicit(e) => {
                for index in 0..e.states.len() {
                    push(Outcome::Listed { index }, &mut out)?;
                }
            }
        }
        out.sort_by(|a, b| a.handle.cmp(&b.handle));
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Allocation(a) => {
                let mut doc = json!({"kind": "allocation", "agents": a.agents, "goods": a.goods});
                match &a.utilities {
                    AllocationUtilities::Additive(values) => doc["values"] = json!(values),
                    AllocationUtilities::Coverage(specs) => {
                        doc["coverage"] = Value::Array(
                            specs
                                .iter()
                                .map(|s| json!({"weights": s.weights, "covers": s.covers}))
                                .collect(),
                        )
                    }
                }
                doc
            }
            Self::Giveaway(g) => json!({"kind": "giveaway", "agents": g.sizes.len(), "sizes": g.sizes, "capacity": g.capacity}),
            Self::Budget(b) => json!({
                "kind": "budget",
                "agents": b.utilities.len(),
                "costs": b.costs,
                "budget": b.budget,
                "utilities": b.utilities,
            }),
            Self::Explicit(e) => json!({"kind": "explicit", "agents": e.agents, "states": e.states}),
        }
    }
}

/// Lists subsets of `0..k` as sorted id lists, refusing when `2^k` exceeds
/// what a capped enumeration could ever need to scan.
fn subsets(k: usize, cap: usize) -> Result<impl Iterator<Item = Vec<usize>>, AppError> {
    if k >= 25 {
        return Err(AppError::CapExceeded { cap });
    }
    Ok((0u32..(1u32 << k)).map(move |mask| (0..k).filter(|&i| mask & (1 << i) != 0).collect()))
}

/// Value of each project under weights `c`: `sum_i c_i * u_i(p)`.
pub fn pb_item_values(instance: &BudgetInstance, weights: &WeightVector) -> Vec<f64> {
    let c = weights.as_slice();
    (0..instance.costs.len())
        .map(|p| instance.utilities.iter().zip(c).map(|(row, ci)| ci * row[p]).sum())
        .collect()
}

fn field<'a>(doc: &'a Map<String, Value>, name: &str) -> Result<&'a Value, AppError> {
    doc.get(name).ok_or_else(|| AppError::schema(name, "missing"))
}

fn as_count(v: &Value, name: &str) -> Result<u64, AppError> {
    v.as_u64().ok_or_else(|| AppError::schema(name, format!("must be a non-negative integer, got {v}")))
}

fn as_real(v: &Value, name: &str) -> Result<f64, AppError> {
    v.as_f64().ok_or_else(|| AppError::schema(name, format!("must be a number, got {v}")))
}

fn as_array<'a>(v: &'a Value, name: &str) -> Result<&'a Vec<Value>, AppError> {
    v.as_array().ok_or_else(|| AppError::schema(name, "must be an array"))
}

fn reals(v: &Value, name: &str) -> Result<Vec<f64>, AppError> {
    as_array(v, name)?
        .iter()
        .enumerate()
        .map(|(k, x)| as_real(x, &format!("{name}[{k}]")))
        .collect()
}

fn counts(v: &Value, name: &str) -> Result<Vec<u64>, AppError> {
    as_array(v, name)?
        .iter()
        .enumerate()
        .map(|(k, x)| as_count(x, &format!("{name}[{k}]")))
        .collect()
}

fn real_matrix(v: &Value, name: &str) -> Result<Vec<Vec<f64>>, AppError> {
    as_array(v, name)?
        .iter()
        .enumerate()
        .map(|(k, row)| reals(row, &format!("{name}[{k}]")))
        .collect()
}

fn check_agents(doc: &Map<String, Value>, derived: usize) -> Result<(), AppError> {
    if let Some(v) = doc.get("agents") {
        let n = as_count(v, "agents")? as usize;
        if n != derived {
            return Err(AppError::invariant("agents", format!("says {n} but the data describes {derived}")));
        }
    }
    Ok(())
}

impl Instance {
    /// Parses and validates a JSON instance document.
    pub fn from_json(doc: &Value) -> Result<Self, AppError> {
        let doc = doc.as_object().ok_or_else(|| AppError::schema("$", "must be an object"))?;
        let kind = field(doc, "kind")?
            .as_str()
            .ok_or_else(|| AppError::schema("kind", "must be a string"))?;
        match kind {
            "allocation" => {
                let goods = as_count(field(doc, "goods")?, "goods")? as usize;
                let utilities = match (doc.get("values"), doc.get("coverage")) {
                    (Some(v), None) => AllocationUtilities::Additive(real_matrix(v, "values")?),
                    (None, Some(c)) => {
                        let specs = as_array(c, "coverage")?
                            .iter()
                            .enumerate()
                            .map(|(i, s)| {
                                let name = format!("coverage[{i}]");
                                let s = s.as_object().ok_or_else(|| AppError::schema(&name, "must be an object"))?;
                                let weights = reals(field(s, "weights")?, &format!("{name}.weights"))?;
                                let covers = as_array(field(s, "covers")?, &format!("{name}.covers"))?
                                    .iter()
                                    .enumerate()
                                    .map(|(g, l)| {
                                        counts(l, &format!("{name}.covers[{g}]"))
                                            .map(|ids| ids.into_iter().map(|e| e as usize).collect())
                                    })
                                    .collect::<Result<Vec<Vec<usize>>, _>>()?;
                                Ok(CoverageUtility { weights, covers })
                            })
                            .collect::<Result<Vec<_>, AppError>>()?;
                        AllocationUtilities::Coverage(specs)
                    }
                    _ => return Err(AppError::schema("values", "give exactly one of `values` and `coverage`")),
                };
                let agents = match &utilities {
                    AllocationUtilities::Additive(v) => v.len(),
                    AllocationUtilities::Coverage(c) => c.len(),
                };
                check_agents(doc, agents)?;
                Ok(Self::Allocation(AllocationInstance::new(agents, goods, utilities)?))
            }
            "giveaway" => {
                let sizes = counts(field(doc, "sizes")?, "sizes")?;
                let capacity = as_count(field(doc, "capacity")?, "capacity")?;
                check_agents(doc, sizes.len())?;
                Ok(Self::Giveaway(GiveawayInstance::new(sizes, capacity)?))
            }
            "budget" => {
                let costs = counts(field(doc, "costs")?, "costs")?;
                let budget = as_count(field(doc, "budget")?, "budget")?;
                let utilities = real_matrix(field(doc, "utilities")?, "utilities")?;
                check_agents(doc, utilities.len())?;
                Ok(Self::Budget(BudgetInstance::new(costs, budget, utilities)?))
            }
            "explicit" => {
                let agents = as_count(field(doc, "agents")?, "agents")? as usize;
                let states = real_matrix(field(doc, "states")?, "states")?;
                Ok(Self::Explicit(ExplicitInstance::new(agents, states)?))
            }
            other => Err(AppError::schema(
                "kind",
                format!("unknown kind `{other}`; expected allocation, giveaway, budget or explicit"),
            )),
        }
    }
}

/// Parses a JSON document into a validated instance.
pub fn load_instance(text: &str) -> Result<Instance, AppError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| AppError::Json(e.to_string()))?;
    Instance::from_json(&doc)
}

/// Decodes a state record of `instance`.
pub fn decode_state(instance: &Instance, record: &StateRecord) -> Result<Outcome, AppError> {
    instance.decode_state(record)
}
