mod support;

#[test]
fn dimension_one_matches_oracle() {
    support::dimension_one_matches_oracle();
}

#[test]
fn dimension_two_matches_oracle() {
    support::dimension_two_matches_oracle();
}
