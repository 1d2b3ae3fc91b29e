use qprs::artifact::Artifact;
use qprs::backend::{generate, Backend};
use qprs::block_parallel::Block;
use qprs::fault_lab::{
    run_campaign, CampaignSpec, ExecutorConfig, FaultDistribution, FaultTarget, MagnitudeLaw,
    Pipeline,
};
use qprs::gfq::PrimeField;
use qprs::lfsr_serial::find_primitive;
use qprs::rns_guard::CorrectionPolicy;

#[test]
fn reloaded_artifact_generates_identically() {
    let field = PrimeField::new(5).unwrap();
    let fp = find_primitive(field, 3, 1 << 16).unwrap().unwrap();
    let k: Vec<u64> = fp.coeffs().iter().map(|&c| c as u64).collect();
    let a = Artifact::derive(5, &k, 2, 2, 1 << 16).unwrap();
    let b = Artifact::from_json(&a.to_json()).unwrap();
    assert_eq!(a.digest(), b.digest());
    assert!(b.consistency(1 << 16).iter().all(|(_, r)| r.is_ok()));
    let seed = Block::new(&field, &[4, 0, 3]).unwrap();
    let reference = generate(&a, Backend::Serial, &seed, 300).unwrap();
    for backend in Backend::ALL {
        assert_eq!(generate(&b, backend, &seed, 300).unwrap(), reference);
    }
}

#[test]
fn random_campaign_on_every_pipeline() {
    let a = Artifact::derive(3, &[2, 1, 1], 1, 2, 1 << 16).unwrap();
    for pipeline in Pipeline::ALL {
        let weights = FaultTarget::ALL
            .into_iter()
            .filter(|&t| pipeline.supports(t))
            .map(|t| (t, 1.0))
            .collect();
        let spec = CampaignSpec {
            executor: ExecutorConfig::new(pipeline).with_correction(CorrectionPolicy::Project),
            distribution: FaultDistribution::Random {
                weights,
                magnitude: MagnitudeLaw::UniformDelta,
                rho: Some(0.3),
            },
            trials: 200,
            steps: 6,
            master_seed: 11,
        };
        let r = run_campaign(&a, &spec, 1 << 20).unwrap();
        let t = r.totals;
        assert_eq!(t.trials, 200);
        assert_eq!(t.injected, t.detected + t.missed + t.masked, "{pipeline:?}");
        assert_eq!(r.by_class.values().map(|c| c.trials).sum::<u64>(), 200);
        assert_eq!(t.miscorrected, 0, "{pipeline:?}");
    }
}
