use eds_core::geometry::EuclideanFrame;

fn main() {
    for n in [2usize, 3] {
        let fr = EuclideanFrame::new(n).unwrap();
        let area = fr.area();
        let psi = fr.psi_minimal();
        // d(area) = th ^ psi
        assert!(area.d().sub(&fr.theta().wedge(&psi)).is_zero_exact(), "pi identity n={n}");
        let v = fr.translation_field();
        assert!(area.lie(&v).is_zero_exact(), "translation preserves area n={n}");
        assert!(fr.theta().lie(&v).is_zero_exact(), "translation preserves th n={n}");
        let w = fr.rotation_field();
        assert!(area.lie(&w).is_zero_exact(), "rotation preserves area n={n}");
        assert!(fr.theta().lie(&w).is_zero_exact(), "rotation preserves th n={n}");
        for i in 1..=n { assert!(fr.pi(i).lie(&w).is_zero_exact(), "rotation preserves pi{i} n={n}"); }
        let x = fr.dilation_field();
        assert!(area.lie(&x).sub(&area.scale_i(n as i64)).is_zero_exact(), "L_x area = n area");
        assert!(fr.theta().lie(&x).sub(&fr.theta()).is_zero_exact(), "L_x th = th");
        // ambient volume closed, L_x Omega = (n+1) Omega
        let omega = fr.ambient_volume();
        assert!(omega.d().is_zero_exact(), "Omega closed");
        assert!(omega.lie(&x).sub(&omega.scale_i(n as i64 + 1)).is_zero_exact(), "L_x Omega");
    }
    println!("frame probe ok");
}
