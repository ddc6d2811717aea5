#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nids/attacks.hpp"
#include "nids/numerics.hpp"
#include "nids/synth.hpp"

#include <array>
#include <cmath>
#include <filesystem>

using namespace nids;

namespace {

FeatureSchema small_schema() {
    FeatureSchema s;
    s.columns = {{"proto", ColumnKind::Numeric, Mutability::Immutable},
                 {"bytes", ColumnKind::Numeric, Mutability::Mutable},
                 {"rate", ColumnKind::Numeric, Mutability::Mutable},
                 {"label", ColumnKind::Label, Mutability::NotApplicable}};
    return s;
}

LabeledDataset blob_data(std::size_t n_per_class, std::uint64_t seed) {
    // immutable column carries no signal, mutable ones separate the classes
    RngStream rng(seed);
    LabeledDataset d;
    d.schema = small_schema();
    d.features = Matrix(2 * n_per_class, 3);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = i < n_per_class ? 0 : 1;
        d.features.at(i, 0) = rng.normal();
        d.features.at(i, 1) = rng.normal() + 2.0 * label;
        d.features.at(i, 2) = rng.normal() - 1.5 * label;
        d.labels.push_back(label);
    }
    return d;
}

MlpNetwork small_target(std::uint64_t seed) {
    RngStream rng(seed);
    return MlpNetwork::create({3, 8, 1}, Activation::ReLU, Activation::Sigmoid, rng);
}

} // namespace

TEST_CASE("binary cross entropy reference values") {
    CHECK(bce_loss(1, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // probabilities clamp at 1e-7 before the log
    CHECK(bce_loss(1, 1.0) == doctest::Approx(-std::log(1.0 - 1e-7)));
    CHECK(bce_loss(0, 1.0) == doctest::Approx(-std::log(1e-7)));
    CHECK(bce_loss_batch(std::array{1.0, 0.0}, std::array{0.5, 0.5}) ==
          doctest::Approx(std::log(2.0)));
}

TEST_CASE("majority vote truth table and tie handling") {
    for (int c1 : {0, 1})
        for (int c2 : {0, 1})
            for (int c3 : {0, 1})
                for (int d : {0, 1}) {
                    const int expect = (c1 + c2 + c3 + d) >= 2 ? 1 : 0;
                    CHECK(majority_vote(c1, c2, c3, d) == expect);
                }
    // the 2-2 tie resolves malicious
    CHECK(majority_vote(1, 1, 0, 0) == 1);
    CHECK(majority_vote(0, 0, 1, 1) == 1);
    CHECK_THROWS_AS(majority_vote(2, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(majority_vote(0, -1, 0, 0), std::invalid_argument);
}

TEST_CASE("majority vote is permutation invariant and monotone") {
    RngStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        int v[4];
        for (int& b : v) b = static_cast<int>(rng.index(2));
        const int base = majority_vote(v[0], v[1], v[2], v[3]);
        CHECK(majority_vote(v[2], v[0], v[1], v[3]) == base);
        CHECK(majority_vote(v[1], v[2], v[0], v[3]) == base);
        // flipping any vote 0 -> 1 never lowers the outcome
        for (int i = 0; i < 4; ++i) {
            if (v[i] == 0) {
                int w[4] = {v[0], v[1], v[2], v[3]};
                w[i] = 1;
                CHECK(majority_vote(w[0], w[1], w[2], w[3]) >= base);
            }
        }
    }
}

TEST_CASE("voting ensemble vote equals the majority of its members") {
    LabeledDataset d = blob_data(60, 17);
    RngStream rng(2);
    VotingEnsemble ens = train_voting_ensemble(d, rng);
    RngStream probe(3);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> x{probe.normal(), probe.normal(), probe.normal()};
        for (int disc : {0, 1}) {
            const int expect = majority_vote(ens.knn->predict(x), ens.lda->predict(x),
                                             ens.lr->predict(x), disc);
            CHECK(ens.vote(x, disc) == expect);
        }
    }
}

TEST_CASE("fgsm with eps 0 is the identity") {
    MlpNetwork net = small_target(1);
    std::vector<double> x{0.3, -0.4, 0.8};
    const std::vector<bool> mask{false, true, true};
    CHECK(fgsm_generate(net, x, 1, 0.0, mask) == x);
}

TEST_CASE("fgsm rejects negative eps") {
    MlpNetwork net = small_target(1);
    std::vector<double> x{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(fgsm_generate(net, x, 1, -0.1, {false, true, true}), std::invalid_argument);
}

TEST_CASE("fgsm moves mutable coordinates by eps along the gradient sign") {
    MlpNetwork net = small_target(7);
    const std::vector<bool> mask{false, true, true};
    RngStream rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
        const double eps = 0.1;
        const auto adv = fgsm_generate(net, x, 1, eps, mask);

        CHECK(adv[0] == x[0]); // immutable coordinate untouched

        auto loss = [&](std::span<const double> q) { return bce_loss(1, net.forward(q)[0]); };
        const auto grad = finite_diff_gradient(loss, x);
        for (std::size_t j = 1; j < 3; ++j) {
            const double step = adv[j] - x[j];
            if (std::fabs(grad[j]) > 1e-6) {
                CHECK(step == doctest::Approx(eps * (grad[j] > 0 ? 1.0 : -1.0)).epsilon(1e-9));
            } else if (std::fabs(grad[j]) < 1e-12) {
                CHECK(step == 0.0); // sign(0) = 0
            }
        }
    }
}

TEST_CASE("fgsm with a pipeline clamps to the training domain") {
    // build a pipeline over a tiny raw dataset so the clip bounds are known
    RawDataset raw;
    raw.schema = small_schema();
    raw.rows = {{"0", "0", "0", "normal"}, {"1", "10", "5", "neptune"},
                {"0.5", "5", "2", "normal"}};
    FittedPipeline pipe = FittedPipeline::fit(raw);
    const LabeledDataset d = pipe.transform(raw);

    MlpNetwork net = small_target(3);
    const std::vector<bool> mask{false, true, true};
    // a huge eps must land exactly on the clip boundary, never outside
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto adv = fgsm_generate(net, d.features.row(i), 1, 50.0, mask, &pipe);
        const auto clipped = pipe.clip_to_domain(adv);
        for (std::size_t j = 0; j < 3; ++j) CHECK(adv[j] == clipped[j]);
    }
}

TEST_CASE("fgsm batch labels everything malicious and records provenance") {
    LabeledDataset d = blob_data(20, 4);
    std::vector<std::size_t> mal_idx;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.labels[i] == 1) mal_idx.push_back(i);
    const LabeledDataset mal = select_rows(d, mal_idx);

    MlpNetwork net = small_target(11);
    const auto mask = mutable_mask_from_schema(d.schema);
    REQUIRE(mask == std::vector<bool>{false, true, true});
    const AdversarialBatch batch = fgsm_batch(net, mal, 0.1, mask, nullptr);
    CHECK(batch.size() == mal.size());
    CHECK(batch.provenance == AttackKind::FGSM);
    for (int y : batch.labels) CHECK(y == 1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(batch.features.at(i, 0) == mal.features.at(i, 0));
    }
}

TEST_CASE("adversarial batch save/load round trip") {
    AdversarialBatch batch;
    batch.features = Matrix(2, 3, {0.1234567890123456, -2.5, 1e-9, 3.25, 0.0, -7.75});
    batch.labels = {1, 1};
    batch.provenance = AttackKind::GAN;
    batch.generator_seed = 424242;
    batch.config_note = "epochs=5";
    const auto path = (std::filesystem::temp_directory_path() / "nids_batch.csv").string();
    save_batch(batch, path, "deadbeef");
    const AdversarialBatch loaded = load_batch(path);
    CHECK(loaded.features.rows() == 2);
    CHECK(loaded.features.values() == batch.features.values());
    CHECK(loaded.labels == batch.labels);
    CHECK(loaded.provenance == AttackKind::GAN);
    CHECK(loaded.generator_seed == 424242);
    CHECK(loaded.config_note == "epochs=5");
}

TEST_CASE("gan training produces the declared shapes and logs") {
    LabeledDataset d = blob_data(40, 23);
    std::vector<std::size_t> mal_idx, ben_idx;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] ? mal_idx : ben_idx).push_back(i);
    const LabeledDataset mal = select_rows(d, mal_idx);
    const LabeledDataset ben = select_rows(d, ben_idx);

    RngStream ens_rng(1);
    const VotingEnsemble ens = train_voting_ensemble(d, ens_rng);

    GanConfig cfg;
    cfg.epochs = 5;
    cfg.batch = 16;
    RngStream rng(7);
    const GanState gan = train_gan(mal, ben, ens, cfg, rng);

    CHECK(gan.mutable_idx == std::vector<std::size_t>{1, 2});
    CHECK(gan.immutable_idx == std::vector<std::size_t>{0});
    // generator consumes the mutable block plus noise, emits the mutable block
    CHECK(gan.generator.input_dim() == 2 + 2);
    CHECK(gan.generator.output_dim() == 2);
    CHECK(gan.discriminator.input_dim() == 3);
    CHECK(gan.discriminator.output_dim() == 1);
    CHECK(gan.log.size() == cfg.epochs + 1); // slot 0 is the pre-update state
    for (const auto& e : gan.log) {
        CHECK(e.evasion_rate >= 0.0);
        CHECK(e.evasion_rate <= 1.0);
    }
}

TEST_CASE("gan generation keeps immutable coordinates and is deterministic") {
    LabeledDataset d = blob_data(40, 29);
    std::vector<std::size_t> mal_idx, ben_idx;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] ? mal_idx : ben_idx).push_back(i);
    const LabeledDataset mal = select_rows(d, mal_idx);
    const LabeledDataset ben = select_rows(d, ben_idx);

    RngStream ens_rng(1);
    const VotingEnsemble ens = train_voting_ensemble(d, ens_rng);
    GanConfig cfg;
    cfg.epochs = 3;
    RngStream t1(19), t2(19);
    const GanState g1 = train_gan(mal, ben, ens, cfg, t1);
    const GanState g2 = train_gan(mal, ben, ens, cfg, t2);

    RngStream s1(101), s2(101), s3(555);
    const AdversarialBatch b1 = generate_adversarial(g1, mal, s1);
    const AdversarialBatch b2 = generate_adversarial(g2, mal, s2);
    const AdversarialBatch b3 = generate_adversarial(g1, mal, s3);

    CHECK(b1.size() == mal.size());
    CHECK(b1.provenance == AttackKind::GAN);
    for (int y : b1.labels) CHECK(y == 1);
    // immutable block copied straight from the source rows
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1.features.at(i, 0) == mal.features.at(i, 0));
    }
    // same training seed and generation seed reproduce bit for bit
    CHECK(b1.features.values() == b2.features.values());
    // a different generation seed actually moves the mutable block
    bool differs = false;
    for (std::size_t k = 0; k < b1.features.size(); ++k) {
        if (b1.features.values()[k] != b3.features.values()[k]) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("gan generation respects pipeline clip bounds") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto csv = (dir / "nids_gan_clip.csv").string();
    SynthConfig scfg;
    scfg.rows = 200;
    scfg.seed = 31;
    synth_csv(scfg, csv);
    RawDataset raw = load_dataset(csv, synth_schema());
    FittedPipeline pipe = FittedPipeline::fit(raw);
    const LabeledDataset d = pipe.transform(raw);

    std::vector<std::size_t> mal_idx, ben_idx;
    for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] ? mal_idx : ben_idx).push_back(i);
    const LabeledDataset mal = select_rows(d, mal_idx);
    const LabeledDataset ben = select_rows(d, ben_idx);

    RngStream ens_rng(1);
    const VotingEnsemble ens = train_voting_ensemble(d, ens_rng);
    GanConfig cfg;
    cfg.epochs = 3;
    RngStream rng(13);
    const GanState gan = train_gan(mal, ben, ens, cfg, rng, &pipe);
    REQUIRE(!gan.clip_lo.empty());

    RngStream gen_rng(77);
    const AdversarialBatch batch = generate_adversarial(gan, mal, gen_rng);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j : gan.mutable_idx) {
            CHECK(batch.features.at(i, j) >= gan.clip_lo[j]);
            CHECK(batch.features.at(i, j) <= gan.clip_hi[j]);
        }
    }
}
