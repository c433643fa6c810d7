use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpir::wire::{decode_answer, decode_query, decode_records, encode_answer, encode_query, encode_records};
use tpir::{client_query, Answer, Fq, LowerUpper, MatrixFq, MdsCode, PrimeField, RecordSet, SchemeParams};

fn primes() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7, 13, 251, 65_521, 2_147_483_647])
}

fn field_and_seed() -> impl Strategy<Value = (PrimeField, u64)> {
    (primes(), any::<u64>()).prop_map(|(q, s)| (PrimeField::new(q).unwrap(), s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_nonzero_element_has_an_inverse((f, seed) in field_and_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = f.random(&mut rng);
        if a.is_zero() {
            prop_assert!(f.inv(a).is_err());
        } else {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fq::ONE);
        }
    }

    #[test]
    fn field_ops_match_integer_arithmetic(q in primes(), a in any::<u32>(), b in any::<u32>()) {
        let f = PrimeField::new(q).unwrap();
        let (x, y) = (f.elem(a as u64), f.elem(b as u64));
        let (a, b) = (a as u64 % q, b as u64 % q);
        prop_assert_eq!(f.add(x, y).value() as u64, (a + b) % q);
        prop_assert_eq!(f.sub(x, y).value() as u64, (a + q - b) % q);
        prop_assert_eq!(f.mul(x, y).value() as u64, a * b % q);
    }

    #[test]
    fn matrix_product_is_associative((f, seed) in field_and_seed(), a in 1usize..7, b in 1usize..7, c in 1usize..7, d in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = MatrixFq::random(f, a, b, &mut rng);
        let y = MatrixFq::random(f, b, c, &mut rng);
        let z = MatrixFq::random(f, c, d, &mut rng);
        prop_assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
    }

    #[test]
    fn transpose_reverses_products((f, seed) in field_and_seed(), a in 1usize..6, b in 1usize..6, c in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = MatrixFq::random(f, a, b, &mut rng);
        let y = MatrixFq::random(f, b, c, &mut rng);
        prop_assert_eq!(x.mul(&y).unwrap().transpose(), y.transpose().mul(&x.transpose()).unwrap());
    }

    #[test]
    fn invertible_samples_invert((f, seed) in field_and_seed(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, inv) = MatrixFq::random_invertible_with_inverse(n, f, &mut rng);
        prop_assert_eq!(s.mul(&inv).unwrap(), MatrixFq::identity(f, n));
    }

    #[test]
    fn factored_solve_agrees_with_product((f, seed) in field_and_seed(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lu = LowerUpper::random(n, n, f, &mut rng);
        let a = lu.product();
        let x: Vec<Fq> = (0..n).map(|_| f.random(&mut rng)).collect();
        let b = a.transpose().left_mul_vec(&x).unwrap();
        prop_assert_eq!(lu.solve(&b).unwrap(), x);
    }

    #[test]
    fn independent_rows_have_full_rank((f, seed) in field_and_seed(), rows in 1usize..12, extra in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = MatrixFq::random_independent_rows(rows, rows + extra, f, &mut rng);
        prop_assert_eq!(m.rank(), rows);
    }

    #[test]
    fn mds_code_is_linear_and_recovers_from_any_positions(seed in any::<u64>(), n in 2usize..8, k_off in 0usize..7) {
        let k = 1 + k_off % (n - 1);
        let f = PrimeField::smallest_at_least(n as u64).unwrap();
        let code = MdsCode::new(n, k, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Fq> = (0..k).map(|_| f.random(&mut rng)).collect();
        let y: Vec<Fq> = (0..k).map(|_| f.random(&mut rng)).collect();
        let c = f.random(&mut rng);
        let mix: Vec<Fq> = x.iter().zip(&y).map(|(&a, &b)| f.add(a, f.mul(c, b))).collect();
        let (ex, ey, em) = (code.encode(&x).unwrap(), code.encode(&y).unwrap(), code.encode(&mix).unwrap());
        for i in 0..n {
            prop_assert_eq!(em[i], f.add(ex[i], f.mul(c, ey[i])));
        }
        let mut positions: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(positions.as_mut_slice(), &mut rng);
        let known: Vec<(usize, Fq)> = positions[..k].iter().map(|&i| (i, ex[i])).collect();
        prop_assert_eq!(code.recover(&known).unwrap(), ex);
    }

    #[test]
    fn reshape_round_trips((f, seed) in field_and_seed(), s in 1usize..8, t in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Fq> = (0..s * t).map(|_| f.random(&mut rng)).collect();
        let m = MatrixFq::from_vec(f, &v, s, t).unwrap();
        prop_assert_eq!((m.rows(), m.cols()), (s, t));
        prop_assert_eq!(m.into_vec(), v);
    }

    #[test]
    fn records_round_trip_through_the_wire((f, seed) in field_and_seed(), m in 1usize..6, l in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let db = RecordSet::random(f, m, l, &mut rng);
        let back = decode_records(&encode_records(&db)).unwrap();
        prop_assert_eq!(back.flat(), db.flat());
        prop_assert_eq!(back.field(), db.field());
    }

    #[test]
    fn answers_round_trip_through_the_wire((f, seed) in field_and_seed(), len in 0usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Answer::new((0..len).map(|_| f.random(&mut rng)).collect());
        prop_assert_eq!(decode_answer(&encode_answer(&a), f).unwrap(), a);
    }

    #[test]
    fn decoders_never_panic_on_garbage(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let f = PrimeField::new(7).unwrap();
        let _ = decode_records(&bytes);
        let _ = decode_query(&bytes);
        let _ = decode_answer(&bytes, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn queries_round_trip_through_the_wire(seed in any::<u64>(), m in 2usize..4, n in 2usize..5, t_off in 0usize..4) {
        let t = 1 + t_off % (n - 1);
        let p = SchemeParams::with_default_field(m, n, t).unwrap();
        let code = MdsCode::new(n, t, p.field()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, queries) = client_query(&p, seed as usize % m, &code, &mut rng).unwrap();
        for q in &queries {
            prop_assert_eq!(&decode_query(&encode_query(q)).unwrap(), q);
        }
    }
}
