use num_complex::Complex64;
use spectra_svi::linalg::{eig, HermitianMatrix};
use spectra_svi::mimo::{throughput, throughput_gradient, ChannelSet, NetworkTopology};
use spectra_svi::textio::read_matrices;
use spectra_svi::BlockProfile;

fn reference() -> spectra_svi::ComplexMatrix {
    let mut items = read_matrices(include_str!("fixtures/channel_t4_r5.txt")).unwrap();
    assert_eq!(items.len(), 1);
    let (label, h) = items.remove(0);
    assert_eq!(label, "tx=4 rx=5");
    h
}

#[test]
fn layout_is_receive_by_transmit() {
    let h = reference();
    assert_eq!((h.rows(), h.cols()), (4, 4));
    // table row TA1, column RA2
    assert_eq!(h.get(1, 0), Complex64::new(-1.39, 2.24));
    // table row TA4, column RA1
    assert_eq!(h.get(0, 3), Complex64::new(2.40, -0.97));
}

#[test]
fn single_link_rate_matches_eigen_formula() {
    let h = reference();
    let topo = NetworkTopology::new(vec![vec![1.0]], vec![4], vec![4], 1.0).unwrap();
    let channels = ChannelSet::new(vec![vec![h.clone()]], &topo).unwrap();
    let x = BlockProfile::new(vec![HermitianMatrix::identity(4).scale(0.25)]);

    // log det(I + H H†/4) = Σ log(1 + λ_k(H H†)/4)
    let gram = HermitianMatrix::try_from_matrix(h.as_matrix() * h.as_matrix().adjoint()).unwrap();
    let oracle: f64 = eig(&gram).unwrap().eigenvalues.iter().map(|l| (1.0 + l / 4.0).ln()).sum();
    let rate = throughput(&channels, &x, 0).unwrap();
    assert!((rate - oracle).abs() < 1e-12, "{rate} vs {oracle}");

    // uniform power is not the best single-user strategy on this channel: the
    // gradient H†(I + H X H†)⁻¹H is not a multiple of I
    let g = eig(&throughput_gradient(&channels, &x, 0).unwrap()).unwrap();
    assert!(g.max() - g.min() > 1e-3);
}
