mod support;

#[test]
fn normal_form_agrees_with_word_enumeration() {
    support::normal_form_agrees_with_word_enumeration();
}

#[test]
fn closure_rejects_elements_off_the_coset() {
    support::closure_rejects_elements_off_the_coset();
}

#[test]
fn every_normal_form_satisfies_the_cocycle_identity() {
    support::every_normal_form_satisfies_the_cocycle_identity();
}

#[test]
fn subgroup_and_voltage_connectivity_agree() {
    support::subgroup_and_voltage_connectivity_agree();
}

#[test]
fn full_connection_growth_matches_explicit_search() {
    support::full_connection_growth_matches_explicit_search();
}

#[test]
fn equivalent_realizations_share_invariants() {
    support::equivalent_realizations_share_invariants();
}

#[test]
fn maximal_form_keeps_the_graph() {
    support::maximal_form_keeps_the_graph();
}

#[test]
fn certificates_survive_relabelling() {
    support::certificates_survive_relabelling();
}

#[test]
fn thinning_ignores_input_order() {
    support::thinning_ignores_input_order();
}

#[test]
fn independent_runs_are_byte_identical() {
    support::independent_runs_are_byte_identical();
}

#[test]
fn maximal_only_generation_keeps_every_class() {
    support::maximal_only_generation_keeps_every_class();
}
