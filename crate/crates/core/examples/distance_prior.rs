//! Distance-embedded priors: the two-supplement worked values, the
//! mixture with a flat prior, and a prior built from a characteristic.

use rbf_mem::mem::PriorVector;
use rbf_mem::model::{Characteristic, Dataset, Source};
use rbf_mem::prior::{build_rbf_prior_detailed, distance_prior_from_distances, mixed_prior, RbfConfig};

fn show(label: &str, p: &PriorVector) {
    let values: Vec<String> = p.values().iter().map(|v| format!("{v:.4}")).collect();
    println!("{label:<28} [{}]", values.join(", "));
}

fn main() -> rbf_mem::Result<()> {
    // Models are ordered 00, 10, 01, 11 (bit h = supplement h included).
    let equal = distance_prior_from_distances(&[&[1.0, 1.0]], &[1.0], 2)?;
    let unequal = distance_prior_from_distances(&[&[1.0, 3.0]], &[1.0], 2)?;
    show("distances (1, 1)", &equal);
    show("distances (1, 3)", &unequal);
    for a in [0.0, 0.5, 1.0] {
        show(&format!("mixed with flat, a = {a}"), &mixed_prior(&unequal, a)?);
    }

    // Supplement 1 resembles the primary on both the target and the
    // characteristic, supplement 3 on neither.
    let primary = Source::new("p", vec![0.9, 1.1, 1.3, 0.7, 1.0])?;
    let supplements = vec![
        Source::new("s1", vec![1.0, 1.2, 0.8, 1.1])?,
        Source::new("s2", vec![1.8, 2.1, 1.6, 2.0])?,
        Source::new("s3", vec![3.1, 2.7, 3.3, 2.9])?,
    ];
    let age = Characteristic {
        name: "age".into(),
        values: vec![40.0, 42.0, 55.0, 71.0],
    };
    let dataset = Dataset::new(primary, supplements, vec![age], vec![])?;
    let detail = build_rbf_prior_detailed(&dataset, &RbfConfig::default())?;
    for b in &detail.blocks {
        println!(
            "\nblock {}: r = {:?}, b = {:.3}, distances {:?}",
            b.name, b.r, b.b, b.distances
        );
    }
    println!("lambdas {:?}", detail.lambdas);
    show("distance prior", &detail.distance_prior);
    show("RBF prior (a = 1)", &detail.prior);
    let inclusion: Vec<String> = detail
        .prior
        .inclusion_probabilities()
        .iter()
        .map(|p| format!("{p:.3}"))
        .collect();
    println!("prior inclusion probabilities [{}]", inclusion.join(", "));
    Ok(())
}
