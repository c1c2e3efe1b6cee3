use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossItem {
    pub name: String,
    pub db: f64,
}

impl LossItem {
    pub fn new(name: &str, db: f64) -> Self {
        Self { name: name.into(), db }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub items: Vec<LossItem>,
    pub total_db: f64,
}

/// 10·log₁₀ N, the pinhole-filtering penalty of a dense N×N operation.
pub fn intrinsic_loss_db(n: usize) -> f64 {
    10.0 * (n.max(1) as f64).log10()
}

/// Component losses of the heralded-photon setup besides the intrinsic term.
pub fn nominal_components() -> Vec<LossItem> {
    vec![
        LossItem::new("SLM1/SLM2 modulation efficiency", 9.52),
        LossItem::new("polarization control and fiber-to-free-space collimation", 3.01),
        LossItem::new("state generation on SLM0", 4.46),
        LossItem::new("free-space-to-fiber collection", 4.15),
    ]
}

/// Itemized budget: the intrinsic term for an N×N operation followed by the
/// given components.
pub fn loss_budget(n: usize, components: &[LossItem]) -> LossBudget {
    let mut items = vec![LossItem::new(&format!("intrinsic 1/N for N = {n}"), intrinsic_loss_db(n))];
    items.extend_from_slice(components);
    let total_db = items.iter().map(|i| i.db).sum();
    LossBudget { items, total_db }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intrinsic_terms() {
        assert_eq!(intrinsic_loss_db(1), 0.0);
        assert!((intrinsic_loss_db(15) - 11.76).abs() < 0.005);
        assert!((intrinsic_loss_db(10) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn itemized_total() {
        let b = loss_budget(15, &nominal_components());
        assert_eq!(b.items.len(), 5);
        assert!((b.total_db - 32.9).abs() < 0.01);
        assert!((b.total_db - 32.0).abs() < 1.0);
    }
}
