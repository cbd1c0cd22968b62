//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Criteria 5 and 6 measure asymptotic bands at desk-scale moduli and
//! are known to miss them on part of their range; see notes in the criterion
//! output. They are asserted as stated, not loosened.

use qaspect::verify;

fn run(r: verify::CriterionResult) {
    print!("{r}");
    assert!(r.pass, "{}", r.summary());
}

#[test]
fn criterion_01_orthogonality() {
    run(verify::criterion_1_orthogonality(200));
}

#[test]
fn criterion_02_primitive_character_sums() {
    run(verify::criterion_2_primitive_sum(300));
}

#[test]
fn criterion_03_gauss_sum_modulus() {
    run(verify::criterion_3_gauss_modulus(300));
}

#[test]
fn criterion_04_dual_method_l_values() {
    run(verify::criterion_4_dual_method(500));
}

#[test]
fn criterion_05_second_moment() {
    run(verify::criterion_5_second_moment());
}

#[test]
fn criterion_06_fractional_moment_scaling() {
    run(verify::criterion_6_moment_scaling());
}

#[test]
fn criterion_07_gaussian_tail_shape() {
    run(verify::criterion_7_gaussian_tail());
}

#[test]
fn criterion_08_theta_machinery() {
    run(verify::criterion_8_theta());
}

#[test]
fn criterion_09_diagonal_evaluation() {
    run(verify::criterion_9_diagonal_eval());
}

#[test]
fn criterion_10_random_model_moments() {
    run(verify::criterion_10_random_model());
}

#[test]
fn criterion_11_real_twist_identity() {
    run(verify::criterion_11_real_twist());
}

#[test]
fn criterion_12_partition_exactness() {
    run(verify::criterion_12_partition());
}

#[test]
fn criterion_13_parameter_inequalities() {
    run(verify::criterion_13_parameters());
}

#[test]
fn criterion_14_mollifier_inequality() {
    run(verify::criterion_14_mollifier_inequality());
}

#[test]
fn criterion_15_b_transform() {
    run(verify::criterion_15_b_transform());
}

#[test]
fn criterion_16_moment_from_tail() {
    run(verify::criterion_16_moment_from_tail());
}
