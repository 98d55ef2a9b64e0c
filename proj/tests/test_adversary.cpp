#include <doctest.h>

#include <cmath>
#include <random>

#include "ctaes/adversary.hpp"
#include "ctaes/errors.hpp"
#include "testutil.hpp"

using namespace ctaes;
using namespace ctaes::adv;

TEST_CASE("discriminate returns the target-class probability") {
    SUBCASE("zero parameters give 0.5") {
        DiscriminatorSet p = DiscriminatorSet::init(1, 4, 3, 1);
        p.w1[0] = Mat(4, 3);
        p.b1[0] = Mat(1, 3);
        p.w2[0] = Mat(3, 2);
        p.b2[0] = Mat(1, 2);
        Graph g;
        auto staged = stage_discriminators(g, p);
        auto prob = discriminate(g, g.leaf(Mat(1, 4, {1, 2, 3, 4})), staged, 0);
        CHECK(g.scalar(prob) == doctest::Approx(0.5));
    }
    SUBCASE("logits (0, ln3) give 0.75") {
        DiscriminatorSet p = DiscriminatorSet::init(1, 4, 3, 1);
        p.w1[0] = Mat(4, 3);
        p.b1[0] = Mat(1, 3);
        p.w2[0] = Mat(3, 2);
        p.b2[0] = Mat(1, 2, {0.0, std::log(3.0)});
        Graph g;
        auto staged = stage_discriminators(g, p);
        auto prob = discriminate(g, g.leaf(Mat(1, 4)), staged, 0);
        CHECK(g.scalar(prob) == doctest::Approx(0.75));
    }
    SUBCASE("strictly inside (0,1) for random inputs") {
        DiscriminatorSet p = DiscriminatorSet::init(2, 5, 4, 9);
        auto gen = seed_stream(4, "disc");
        std::uniform_real_distribution<double> u(-3, 3);
        Graph g;
        auto staged = stage_discriminators(g, p);
        for (int rep = 0; rep < 10; ++rep) {
            Mat h(1, 5);
            for (auto& x : h.a) x = u(gen);
            double v = g.scalar(discriminate(g, g.leaf(h), staged, rep % 2));
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("adversarial loss follows the sum form") {
    SUBCASE("confident correct discriminators drive the loss toward zero") {
        DiscriminatorSet p = DiscriminatorSet::init(1, 2, 2, 1);
        // hidden relu(10*x0) and w2 mapping strongly to class 1
        p.w1[0] = Mat(2, 2, {40.0, 0.0, 0.0, 0.0});
        p.b1[0] = Mat(1, 2);
        p.w2[0] = Mat(2, 2, {-1.0, 1.0, 0.0, 0.0});
        p.b2[0] = Mat(1, 2, {20.0, -20.0}); // bias: source by default
        Graph g;
        auto staged = stage_discriminators(g, p);
        auto src = g.leaf(Mat(1, 2, {0.0, 0.0}));  // p_target ~ 0
        auto tgt = g.leaf(Mat(1, 2, {2.0, 0.0}));  // p_target ~ 1
        auto loss = adversarial_loss(g, {{src}}, {tgt}, staged);
        CHECK(g.scalar(loss) < 1e-6);
        CHECK(g.scalar(loss) >= 0.0);
    }
    SUBCASE("p=0.5 everywhere with one source and 4+4 essays costs 8 ln 2") {
        DiscriminatorSet p = DiscriminatorSet::init(1, 3, 2, 1);
        p.w1[0] = Mat(3, 2);
        p.b1[0] = Mat(1, 2);
        p.w2[0] = Mat(2, 2);
        p.b2[0] = Mat(1, 2);
        Graph g;
        auto staged = stage_discriminators(g, p);
        std::vector<Graph::NodeId> src, tgt;
        for (int i = 0; i < 4; ++i) {
            src.push_back(g.leaf(Mat(1, 3, {1.0 * i, 0, 0})));
            tgt.push_back(g.leaf(Mat(1, 3, {0, 1.0 * i, 0})));
        }
        auto loss = adversarial_loss(g, {src}, tgt, staged);
        CHECK(g.scalar(loss) == doctest::Approx(8.0 * std::log(2.0)));
    }
    SUBCASE("matches a brute-force loop and decomposes per discriminator") {
        DiscriminatorSet p = DiscriminatorSet::init(2, 4, 3, 77);
        auto gen = seed_stream(8, "adv");
        std::uniform_real_distribution<double> u(-1, 1);
        std::vector<std::vector<Mat>> src_vals(2);
        std::vector<Mat> tgt_vals;
        for (int i = 0; i < 3; ++i) {
            for (int t = 0; t < 2; ++t) {
                Mat h(1, 4);
                for (auto& x : h.a) x = u(gen);
                src_vals[t].push_back(h);
            }
            Mat h(1, 4);
            for (auto& x : h.a) x = u(gen);
            tgt_vals.push_back(h);
        }
        Graph g;
        auto staged = stage_discriminators(g, p);
        std::vector<std::vector<Graph::NodeId>> src_nodes(2);
        std::vector<Graph::NodeId> tgt_nodes;
        for (int t = 0; t < 2; ++t)
            for (const auto& h : src_vals[t]) src_nodes[t].push_back(g.leaf(h));
        for (const auto& h : tgt_vals) tgt_nodes.push_back(g.leaf(h));
        auto loss = adversarial_loss(g, src_nodes, tgt_nodes, staged);

        // oracle: independent loop over discriminators and essays
        double expect = 0.0;
        double per_disc_total = 0.0;
        for (int i = 0; i < 2; ++i) {
            double term = 0.0;
            for (const auto& h : src_vals[i]) {
                Graph g2;
                auto st = stage_discriminators(g2, p);
                term += std::log(1.0 - g2.scalar(discriminate(g2, g2.leaf(h), st, i)));
            }
            for (const auto& h : tgt_vals) {
                Graph g2;
                auto st = stage_discriminators(g2, p);
                term += std::log(g2.scalar(discriminate(g2, g2.leaf(h), st, i)));
            }
            expect += term;

            // per-discriminator piece via the module itself
            Graph g3;
            auto st3 = stage_discriminators(g3, p);
            std::vector<std::vector<Graph::NodeId>> solo(2);
            for (const auto& h : src_vals[i]) solo[i].push_back(g3.leaf(h));
            std::vector<Graph::NodeId> tg3;
            for (const auto& h : tgt_vals) tg3.push_back(g3.leaf(h));
            // feed only discriminator i an actual batch; the other gets none
            DiscriminatorSet single = DiscriminatorSet::init(1, 4, 3, 77);
            single.w1[0] = p.w1[i];
            single.b1[0] = p.b1[i];
            single.w2[0] = p.w2[i];
            single.b2[0] = p.b2[i];
            Graph g4;
            auto st4 = stage_discriminators(g4, single);
            std::vector<Graph::NodeId> s4, t4;
            for (const auto& h : src_vals[i]) s4.push_back(g4.leaf(h));
            for (const auto& h : tgt_vals) t4.push_back(g4.leaf(h));
            per_disc_total += g4.scalar(adversarial_loss(g4, {s4}, t4, st4));
        }
        CHECK(g.scalar(loss) == doctest::Approx(-expect).epsilon(1e-10));
        CHECK(g.scalar(loss) == doctest::Approx(per_disc_total).epsilon(1e-10));
    }
    SUBCASE("empty target batch is a contract error") {
        DiscriminatorSet p = DiscriminatorSet::init(1, 2, 2, 1);
        Graph g;
        auto staged = stage_discriminators(g, p);
        auto src = g.leaf(Mat(1, 2));
        CHECK_THROWS_AS(adversarial_loss(g, {{src}}, {}, staged), ContractError);
    }
}

// Essays from source topic j contribute nothing to discriminator i's
// gradient: dropping topic 1's source batch leaves discriminator 0's
// gradients bit-identical.
TEST_CASE("discriminators receive no gradient from other topics' source essays") {
    DiscriminatorSet p = DiscriminatorSet::init(2, 4, 3, 55);
    auto gen = seed_stream(56, "adv-cross");
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Mat> src0, src1, tgt;
    for (int i = 0; i < 3; ++i) {
        Mat a(1, 4), b(1, 4), c(1, 4);
        for (auto& x : a.a) x = u(gen);
        for (auto& x : b.a) x = u(gen);
        for (auto& x : c.a) x = u(gen);
        src0.push_back(a);
        src1.push_back(b);
        tgt.push_back(c);
    }
    auto grads_of_disc0 = [&](bool include_topic1) {
        Graph g;
        auto staged = stage_discriminators(g, p);
        std::vector<std::vector<Graph::NodeId>> src(2);
        for (const auto& h : src0) src[0].push_back(g.leaf(h));
        if (include_topic1)
            for (const auto& h : src1) src[1].push_back(g.leaf(h));
        std::vector<Graph::NodeId> tg;
        for (const auto& h : tgt) tg.push_back(g.leaf(h));
        g.backward(adversarial_loss(g, src, tg, staged));
        std::vector<double> out;
        for (Graph::NodeId id : {staged.w1[0], staged.b1[0], staged.w2[0], staged.b2[0]})
            for (double v : g.grad(id).a) out.push_back(v);
        return out;
    };
    CHECK(grads_of_disc0(true) == grads_of_disc0(false));
}

// A single update on L_adv must push discriminators downhill while pushing
// the shared prompt uphill: parameter-wise, GRL gradients for theta_G match
// the plain gradients, and for theta_A they are the exact negation.
TEST_CASE("GRL routes descent to discriminators and ascent to the shared prompt") {
    auto fixture = testutil::ToyFixture::make(202);

    testutil::BuiltLoss with_grl, without_grl;
    testutil::build_loss(with_grl, fixture, testutil::LossKind::adv, /*use_grl=*/true);
    testutil::build_loss(without_grl, fixture, testutil::LossKind::adv, /*use_grl=*/false);
    with_grl.graph.backward(with_grl.loss);
    without_grl.graph.backward(without_grl.loss);

    auto refs = model::enumerate_params(fixture.params);
    int flipped = 0, matched = 0;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        const Mat& ga = with_grl.graph.grad(with_grl.staged.leaf_ids[r]);
        const Mat& gb = without_grl.graph.grad(without_grl.staged.leaf_ids[r]);
        if (refs[r].group == model::Group::shared_prompt) {
            for (int i = 0; i < ga.size(); ++i) {
                CHECK(ga.a[i] == doctest::Approx(-gb.a[i]).epsilon(1e-12));
                if (std::fabs(gb.a[i]) > 1e-12) ++flipped;
            }
        } else if (refs[r].group == model::Group::discriminators) {
            for (int i = 0; i < ga.size(); ++i) {
                CHECK(ga.a[i] == doctest::Approx(gb.a[i]).epsilon(1e-12));
                if (std::fabs(gb.a[i]) > 1e-12) ++matched;
            }
        }
    }
    CHECK(flipped > 0);
    CHECK(matched > 0);
}

TEST_CASE("composed GRL gradient matches finite differences of the sign-flipped path") {
    auto fixture = testutil::ToyFixture::make(303);
    testutil::BuiltLoss built;
    testutil::build_loss(built, fixture, testutil::LossKind::adv, /*use_grl=*/true);
    built.graph.backward(built.loss);

    auto refs = model::enumerate_params(fixture.params);
    auto gen = seed_stream(304, "adv-fd");
    int probes = 0;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        bool is_shared = refs[r].group == model::Group::shared_prompt;
        bool is_disc = refs[r].group == model::Group::discriminators;
        if (!is_shared && !is_disc) continue;
        Mat* value = refs[r].value;
        std::uniform_int_distribution<int> pick(0, value->size() - 1);
        for (int rep = 0; rep < 4; ++rep) {
            int i = pick(gen);
            double num = testutil::central_diff(
                [&](double v) {
                    double saved = value->a[i];
                    value->a[i] = v;
                    double loss = testutil::eval_loss(fixture, testutil::LossKind::adv, false);
                    value->a[i] = saved;
                    return loss;
                },
                value->a[i]);
            double analytic = built.graph.grad(built.staged.leaf_ids[r]).a[i];
            if (is_shared) num = -num; // GRL flips the prompt-side sign
            CHECK(testutil::rel_close(analytic, num, 1e-4, 1e-7));
            ++probes;
        }
    }
    CHECK(probes >= 20);
}
