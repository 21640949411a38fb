use std::ffi::{CStr, CString};
use std::ptr;

use ringgraph_ffi::*;

fn last_error() -> String {
    let p = rg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn ring(gamma_half: f64, variant: RgRingVariant) -> *mut RgNetlist {
    let mut p = rg_ring_params_default(0.6);
    p.gamma_half = gamma_half;
    p.variant = variant as u32;
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { rg_ring_new(&p, &mut net) }, RgStatus::Ok);
    net
}

#[test]
fn sweep_round_trip() {
    let net = ring(0.18, RgRingVariant::Balanced);
    let mut ports = 0;
    unsafe {
        assert_eq!(rg_netlist_ports(net, &mut ports), RgStatus::Ok);
        assert_eq!(ports, 2);
        let mut spec = ptr::null_mut();
        assert_eq!(rg_sweep(net, 8e9, 9e9, 201, &mut spec), RgStatus::Ok);
        assert!(rg_last_error().is_null());
        let n = rg_spectrum_len(spec);
        assert_eq!((n, rg_spectrum_ports(spec)), (201, 2));

        let mut f = vec![0.0; n];
        assert_eq!(rg_spectrum_frequencies(spec, f.as_mut_ptr(), n), RgStatus::Ok);
        assert_eq!((f[0], f[n - 1]), (8e9, 9e9));

        let mut s21 = vec![0.0; 2 * n];
        let mut s12 = vec![0.0; 2 * n];
        assert_eq!(rg_spectrum_element(spec, 1, 0, s21.as_mut_ptr(), 2 * n), RgStatus::Ok);
        assert_eq!(rg_spectrum_element(spec, 0, 1, s12.as_mut_ptr(), 2 * n), RgStatus::Ok);
        let mut asym = vec![0.0; n];
        assert_eq!(rg_asymmetry(spec, asym.as_mut_ptr(), n), RgStatus::Ok);
        for k in 0..n {
            let p21 = s21[2 * k].powi(2) + s21[2 * k + 1].powi(2);
            let p12 = s12[2 * k].powi(2) + s12[2 * k + 1].powi(2);
            assert!((asym[k] - (p21 - p12)).abs() < 1e-14);
        }
        assert!(asym.iter().sum::<f64>() / n as f64 > 0.1);

        let mut tau = vec![0.0; 2 * n];
        assert_eq!(rg_transmission_delay(spec, 0, 1, tau.as_mut_ptr(), 2 * n), RgStatus::Ok);
        assert!(tau[0].is_nan() && tau[2 * n - 1].is_nan());
        assert!(tau[2..2 * n - 2].iter().all(|v| v.is_finite()));

        rg_spectrum_free(spec);
        rg_netlist_free(net);
    }
}

#[test]
fn buffer_and_index_errors() {
    let net = ring(0.0, RgRingVariant::Unbalanced);
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(rg_sweep(net, 8e9, 9e9, 11, &mut spec), RgStatus::Ok);
        let mut buf = vec![0.0; 22];
        assert_eq!(rg_spectrum_element(spec, 0, 1, buf.as_mut_ptr(), 11), RgStatus::InvalidArgument);
        assert!(last_error().contains("22 required"), "{}", last_error());
        assert_eq!(rg_spectrum_element(spec, 2, 0, buf.as_mut_ptr(), 22), RgStatus::Domain);
        assert_eq!(rg_spectrum_element(spec, 0, 0, ptr::null_mut(), 22), RgStatus::NullPointer);
        assert_eq!(rg_sweep(net, 9e9, 8e9, 11, &mut spec), RgStatus::Domain);
        rg_spectrum_free(spec);
        rg_netlist_free(net);
    }
}

#[test]
fn null_handles() {
    let mut out = ptr::null_mut();
    let mut ports = 0;
    unsafe {
        assert_eq!(rg_ring_new(ptr::null(), &mut out), RgStatus::NullPointer);
        assert_eq!(rg_netlist_ports(ptr::null(), &mut ports), RgStatus::NullPointer);
        assert_eq!(rg_sweep(ptr::null(), 1e9, 2e9, 3, ptr::null_mut()), RgStatus::NullPointer);
        assert_eq!(rg_spectrum_len(ptr::null()), 0);
        rg_netlist_free(ptr::null_mut());
        rg_spectrum_free(ptr::null_mut());
    }
    assert!(out.is_null());
}

#[test]
fn bad_ring_params() {
    let mut p = rg_ring_params_default(0.6);
    p.gyrator = 7;
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { rg_ring_new(&p, &mut net) }, RgStatus::InvalidArgument);
    assert!(last_error().contains("gyrator"));

    let mut p = rg_ring_params_default(0.6);
    p.gyrator_phase = 1.0;
    assert_eq!(unsafe { rg_ring_new(&p, &mut net) }, RgStatus::Domain);
    p.gyrator = RgGyrator::Ideal as u32;
    assert_eq!(unsafe { rg_ring_new(&p, &mut net) }, RgStatus::Ok);
    unsafe { rg_netlist_free(net) };
}

#[test]
fn netlist_documents() {
    let good = CString::new(
        "external = [\"l.0\", \"l.1\"]\nconnections = []\n\n[[component]]\nid = \"l\"\nkind = \"line\"\nelectrical_length = \"0.3 m\"\nlossless = true\n",
    )
    .unwrap();
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(rg_netlist_parse(good.as_ptr(), &mut net), RgStatus::Ok, "{}", last_error());
        rg_netlist_free(net);
    }

    let unknown = CString::new("external = []\nconnections = []\ncolour = 1\n").unwrap();
    assert_eq!(unsafe { rg_netlist_parse(unknown.as_ptr(), &mut net) }, RgStatus::Parse);

    let dangling = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/dangling_port.toml\0");
    let status = unsafe { rg_netlist_load(dangling.as_ptr().cast(), &mut net) };
    assert_eq!(status, RgStatus::Validation);
    assert!(last_error().contains("stub.1"), "{}", last_error());

    let missing = CString::new("/nonexistent/net.toml").unwrap();
    assert_eq!(unsafe { rg_netlist_load(missing.as_ptr(), &mut net) }, RgStatus::Io);

    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { rg_netlist_parse(bytes.as_ptr().cast(), &mut net) }, RgStatus::InvalidArgument);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
