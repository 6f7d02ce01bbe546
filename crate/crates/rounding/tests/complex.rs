use nil_rounding::MeshedNilmanifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn integers(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-50..50) as f64).collect()
}

#[test]
fn boundary_of_boundary_vanishes_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (k, n) in [(1, [4, 4, 4]), (2, [4, 6, 6]), (3, [5, 4, 8])] {
        let m = MeshedNilmanifold::new(format!("Gamma{k}"), k, n).unwrap();
        let f = integers(&mut rng, m.num_vertices());
        assert!(m.d1(&m.d0(&f)).iter().all(|&x| x == 0.0));
        let x = integers(&mut rng, m.num_edges());
        assert!(m.d2(&m.d1(&x)).iter().all(|&y| y == 0.0));
    }
}

#[test]
fn euler_characteristic_is_zero() {
    for (k, n) in [(1, [4, 4, 4]), (2, [8, 4, 6]), (4, [4, 8, 4])] {
        let m = MeshedNilmanifold::new(format!("Gamma{k}"), k, n).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
    }
}

#[test]
fn refinement_nests_the_coarse_mesh() {
    let coarse = MeshedNilmanifold::new("Gamma2", 2, [4, 4, 4]).unwrap();
    let fine = MeshedNilmanifold::new("Gamma2", 2, [8, 8, 8]).unwrap();
    let embed = |v: usize| {
        let [i, j, l] = coarse.coords(v);
        fine.index(2 * i, 2 * j, 2 * l)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for v in 0..coarse.num_vertices() {
        assert_eq!(coarse.position(v), fine.position(embed(v)));
        let d = [rng.gen_range(-9..9), rng.gen_range(-9..9), rng.gen_range(-9..9)];
        let c = coarse.offset(v, d);
        let f = fine.offset(embed(v), d.map(|x| 2 * x));
        assert_eq!((embed(c.vertex), c.q1, c.q2), (f.vertex, f.q1, f.q2));
    }

    let f = integers(&mut rng, fine.num_vertices());
    let restricted: Vec<f64> = (0..coarse.num_vertices()).map(|v| f[embed(v)]).collect();
    let dc = coarse.d0(&restricted);
    let df = fine.d0(&f);
    for v in 0..coarse.num_vertices() {
        let w = embed(v);
        for a in 0..3 {
            let chained = df[3 * w + a] + df[3 * fine.neighbor(w, a) + a];
            assert_eq!(dc[3 * v + a], chained);
        }
    }
}
