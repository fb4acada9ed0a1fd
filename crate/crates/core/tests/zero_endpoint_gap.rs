use proptest::prelude::*;

use siegel::oracle::connect_constructive;
use siegel::quasimetric::delta_value;
use siegel::{ModelParams, Point};

fn point() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, t)| Point::new(x, y, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn connector_endpoint_is_euclidean_close(m in 1.0..3.0f64, p in point(), q in point()) {
        let par = ModelParams::new(m).unwrap();
        let end = connect_constructive(&p, &q, &par).unwrap().endpoint(&par);
        prop_assert!(end.euclid_dist(&q) <= 1e-8);
    }

    #[test]
    fn connector_endpoint_is_delta_close(m in 1.0..3.0f64, p in point(), q in point()) {
        let par = ModelParams::new(m).unwrap();
        let end = connect_constructive(&p, &q, &par).unwrap().endpoint(&par);
        prop_assert!(delta_value(&end, &q, &par) <= 1e-8, "end {:?} q {:?}", end, q);
    }
}
