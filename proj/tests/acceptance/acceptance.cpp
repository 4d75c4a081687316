#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "choice_fixtures.hpp"
#include "gev_instances.hpp"
#include "linear_gaussian.hpp"
#include "iapgev/data/corpus.hpp"
#include "iapgev/data/csv.hpp"
#include "iapgev/data/synth.hpp"
#include "iapgev/estimation/likelihood.hpp"
#include "iapgev/gev/probability.hpp"
#include "iapgev/gev/generation_check.hpp"
#include "iapgev/numeric/finite_difference.hpp"
#include "iapgev/vae/inference.hpp"

namespace fs = std::filesystem;
using namespace iapgev;
using numeric::DenseMatrix;
using numeric::Rng;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const fs::path work = fs::path(IAPGEV_TEST_WORKDIR) / "acceptance_work";

int run(const std::string& args) {
    const std::string cmd = "cd '" + work.string() + "' && '" IAPGEV_CLI "' " + args + " >/dev/null 2>>errors.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(work / p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

std::vector<double> softmax(const std::vector<double>& v) {
    const double top = *std::max_element(v.begin(), v.end());
    std::vector<double> p;
    double total = 0.0;
    for (double x : v) total += std::exp(x - top);
    for (double x : v) p.push_back(std::exp(x - top) / total);
    return p;
}

double sum_error(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p) s += x;
    return std::abs(s - 1.0);
}

Outcome gev_axioms() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(2024);
    std::size_t partials = 0, vanishing = 0;
    double worst_homogeneity = 0.0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t J = 1 + rng.index(5);
        const std::size_t M = 1 + rng.index(3);
        const bool equal = i % 4 == 0;
        const auto inst = testing::random_gev_instance(rng, J, M, equal);
        const auto r = gev::verify_generation_function(inst.nests, inst.v, inst.bc, std::min<std::size_t>(3, J));
        std::vector<double> factors;
        for (const auto& h : r.homogeneity) {
            factors.push_back(h.factor);
            worst_homogeneity = std::max(worst_homogeneity, h.residual);
            o.require(h.residual < 1e-10, "homogeneity residual " + fmt(h.residual) + " on instance " + std::to_string(i));
        }
        o.require(factors == std::vector<double>{0.5, 2.0, 10.0}, "homogeneity factors differ from {0.5, 2, 10}");
        o.require(r.nonnegative, "negative G on instance " + std::to_string(i));
        for (const auto& p : r.partials) {
            ++partials;
            const std::size_t k = p.indices.size();
            if (k == 1) o.require(p.finite_difference >= 0.0, "negative first partial");
            // Odd orders non-negative, even orders non-positive, up to the noise floor.
            const double signed_value = k % 2 == 1 ? p.finite_difference : -p.finite_difference;
            o.require(signed_value >= -gev::mixed_partial_noise_floor, "sign pattern broken on instance " + std::to_string(i));
            o.require(p.sign_ok, "reported sign failure on instance " + std::to_string(i));
            if (equal && k > 1) {
                ++vanishing;
                o.require(std::abs(p.finite_difference) < gev::mixed_partial_noise_floor,
                          "equal-scale mixed partial does not vanish on instance " + std::to_string(i));
            }
        }
    }
    const double t = seconds_since(t0);
    o.require(t < 30.0, "runtime " + fmt(t) + " s");
    if (o.pass)
        o.detail = "200 instances, " + std::to_string(partials) + " partials (" + std::to_string(vanishing) +
                   " equal-scale), max homogeneity residual " + fmt(worst_homogeneity) + ", " + fmt(t) + " s";
    return o;
}

Outcome collapse() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(77);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t J = 1 + rng.index(8);
        const auto inst = testing::random_gev_instance(rng, J, 1 + rng.index(3));
        const auto ones = gev::PerceptionVector::ones(J);
        const std::vector<double> unit(J, 1.0);
        const double mu = inst.nests.model_scale();
        std::vector<double> scaled;
        for (double x : inst.v.values) scaled.push_back(mu * x);
        const auto single = gev::NestStructure(mu, {mu}, DenseMatrix(J, 1, 1.0));

        const auto iap_cnl_ones = gev::iap_cnl_prob(inst.v, ones, inst.nests);
        const auto cnl = testing::reference_cnl_prob(inst.v, inst.nests, unit);
        const auto cnl_single = gev::iap_cnl_prob(inst.v, ones, single);
        const auto mnl = gev::iap_mnl_prob(inst.v, ones);
        const auto iap_mnl = gev::iap_mnl_prob(inst.v, inst.bc);
        const auto iap_cnl = gev::iap_cnl_prob(inst.v, inst.bc, inst.nests);
        const double d1 = max_abs_diff(iap_cnl_ones, cnl);
        const double d2 = std::max(max_abs_diff(cnl_single, softmax(scaled)),
                                   max_abs_diff(testing::reference_cnl_prob(inst.v, single, unit), softmax(scaled)));
        const double d3 = max_abs_diff(mnl, softmax(inst.v.values));
        double d4 = 0.0;
        for (const auto* p : {&iap_cnl_ones, &cnl, &cnl_single, &mnl, &iap_mnl, &iap_cnl}) d4 = std::max(d4, sum_error(*p));
        worst = std::max({worst, d1, d2, d3, d4});
        o.require(d1 < 1e-12, "IAP-CNL(BC=1) vs CNL " + fmt(d1));
        o.require(d2 < 1e-12, "single-nest CNL vs MNL " + fmt(d2));
        o.require(d3 < 1e-12, "IAP-MNL(BC=1) vs MNL " + fmt(d3));
        o.require(d4 < 1e-12, "probabilities sum off by " + fmt(d4));
    }
    const double t = seconds_since(t0);
    o.require(t < 10.0, "runtime " + fmt(t) + " s");
    if (o.pass) o.detail = "100 instances, max deviation " + fmt(worst) + ", " + fmt(t) + " s";
    return o;
}

Outcome gradients() {
    Outcome o;
    const auto t0 = Clock::now();

    vae::VaeHyperparams hp;
    hp.latent_dim = 2;
    hp.encoder_hidden_layers = 1;
    hp.decoder_hidden_layers = 1;
    hp.hidden_width = 3;
    hp.mc_draws = 4;
    Rng init(5);
    vae::VaeModel model(hp, 2, init);
    DenseMatrix rows(6, 2);
    Rng fill(9);
    for (double& v : rows.entries()) v = std::abs(fill.normal()) + 0.1;
    double worst_vae = 0.0;
    for (auto mode : {vae::BatchNormMode::train, vae::BatchNormMode::eval}) {
        Rng rng(13);
        const auto eval = vae::evaluate_bound(model, rows, hp.mc_draws, rng, mode, true);
        std::vector<double> analytic, fd;
        for (const auto& g : eval.gradients) analytic.insert(analytic.end(), g.entries().begin(), g.entries().end());
        vae::VaeModel probe = model;
        for (auto& p : probe.parameters()) {
            for (double& w : p.value.entries()) {
                const double saved = w, h = 1e-5;
                w = saved + h;
                Rng up_rng(13);
                const double up = vae::evaluate_bound(probe, rows, hp.mc_draws, up_rng, mode, false).value;
                w = saved - h;
                Rng down_rng(13);
                const double down = vae::evaluate_bound(probe, rows, hp.mc_draws, down_rng, mode, false).value;
                w = saved;
                fd.push_back((up - down) / (2.0 * h));
            }
        }
        worst_vae = std::max(worst_vae, numeric::max_relative_error(analytic, fd, 1e-6));
    }
    o.require(worst_vae < 1e-4, "VAE bound gradient relative error " + fmt(worst_vae));

    Rng rng(17);
    const auto data = testing::random_dataset(rng, 10, 5, 3, 2);
    double worst_ll = 0.0;
    for (auto family : {estimation::Family::mnl, estimation::Family::cnl, estimation::Family::iap_mnl,
                        estimation::Family::iap_cnl}) {
        estimation::ModelSpec spec;
        spec.family = family;
        spec.names = {"a", "b", "c"};
        spec.columns = {0, 1, 2};
        for (int k = 0; k < 20; ++k) {
            std::vector<double> beta;
            for (int a = 0; a < 3; ++a) beta.push_back(rng.normal());
            const auto g = estimation::log_likelihood_gradient(data, beta, spec);
            const auto fd = numeric::finite_difference_gradient(
                [&](std::span<const double> b) { return estimation::log_likelihood(data, b, spec); }, beta);
            worst_ll = std::max(worst_ll, numeric::max_relative_error(g.gradient, fd));
        }
    }
    o.require(worst_ll < 1e-6, "log-likelihood gradient relative error " + fmt(worst_ll));
    const double t = seconds_since(t0);
    o.require(t < 60.0, "runtime " + fmt(t) + " s");
    if (o.pass)
        o.detail = "VAE bound max rel err " + fmt(worst_vae) + ", LL max rel err " + fmt(worst_ll) + " over 4 families x 20 points, " +
                   fmt(t) + " s";
    return o;
}

Outcome iwae_bound() {
    Outcome o;
    const auto t0 = Clock::now();
    const testing::LinearGaussian lg;
    const double x = 1.3;
    const double truth = lg.log_marginal(x);
    double previous = -INFINITY, previous_se = 0.0;
    std::string means;
    for (std::size_t S : {1u, 5u, 25u, 125u}) {
        const std::size_t seeds = 10000;
        double sum = 0.0, sq = 0.0;
        for (std::size_t s = 0; s < seeds; ++s) {
            Rng rng(numeric::derive_seed(S, s));
            const double b = lg.bound(x, S, rng);
            sum += b;
            sq += b * b;
        }
        const double mean = sum / seeds;
        const double se = std::sqrt((sq / seeds - mean * mean) / (seeds - 1));
        means += (means.empty() ? "" : ", ") + std::string("S=") + std::to_string(S) + ": " + fmt(mean - truth);
        o.require(mean <= truth + 3.0 * se, "mean bound above the marginal at S=" + std::to_string(S));
        o.require(mean >= previous - 3.0 * std::hypot(se, previous_se), "bound decreased at S=" + std::to_string(S));
        previous = mean;
        previous_se = se;
    }
    double worst = 0.0;
    for (double xs : {-1.5, 0.0, 0.7, 2.0}) {
        Rng rng(numeric::derive_seed(99, static_cast<std::uint64_t>(std::abs(xs) * 10)));
        // The non-recording path is the one estimate_log_bc runs.
        worst = std::max(worst, std::abs(lg.bound(xs, 100000, rng, false) - lg.log_marginal(xs)));
    }
    o.require(worst < 0.01, "S=1e5 estimate off by " + fmt(worst));
    const double t = seconds_since(t0);
    o.require(t < 180.0, "runtime " + fmt(t) + " s");
    if (o.pass)
        o.detail = "mean gap to log marginal " + means + "; S=1e5 max error " + fmt(worst) + ", " + fmt(t) + " s";
    return o;
}

struct SimRow {
    std::string mode;
    std::uint64_t seed = 0;
    bool se_available = false;
    std::vector<double> beta, t_truth;
};

std::vector<SimRow> parse_simulation(const std::string& text) {
    std::vector<SimRow> out;
    std::istringstream in(text);
    bool table = false;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("## ", 0) == 0) {
            table = false;
            std::istringstream head(line.substr(3));
            SimRow r;
            std::string word;
            head >> r.mode >> word >> r.seed;
            if (word == "seed") out.push_back(r);
            continue;
        }
        if (out.empty()) continue;
        if (line == "# std_errors: available") out.back().se_available = true;
        if (line.rfind("attribute,truth,", 0) == 0) {
            table = true;
            continue;
        }
        if (table && !line.empty()) {
            const auto cells = data::split_csv_line(line);
            out.back().beta.push_back(std::stod(cells[2]));
            out.back().t_truth.push_back(std::stod(cells[5]));
        }
    }
    return out;
}

Outcome consistency() {
    Outcome o;
    const auto t0 = Clock::now();
    o.require(run("--seed 0 synth -n 2000 --corpus corpus.csv") == 0, "synth failed");
    o.require(run("--seed 0 --workers 1 train --corpus corpus.csv --checkpoint model.bin --report train.txt") == 0,
              "training at defaults failed");
    const double train_time = seconds_since(t0);
    if (!o.pass) return o;
    o.require(run("--seed 0 simulate --checkpoint model.bin --modes random --seeds 20 --report random.txt") == 0,
              "random-mode experiments failed");
    o.require(run("--seed 0 simulate --checkpoint model.bin --modes low,high --threshold-quantile 0.5 "
                  "--report filtered.txt") == 0,
              "low/high experiments failed");
    const double t = seconds_since(t0);
    if (!o.pass) return o;

    const auto random = parse_simulation(slurp("random.txt"));
    o.require(random.size() == 20, "expected 20 random-mode experiments");
    std::size_t inside = 0, total = 0, sets = 0;
    std::string reference;
    for (const auto& r : random) {
        o.require(r.se_available && r.t_truth.size() == 3, "seed " + std::to_string(r.seed) + " has no standard errors");
        bool all = true;
        for (double v : r.t_truth) {
            ++total;
            if (std::abs(v) < 1.96) ++inside;
            else all = false;
        }
        if (all) ++sets;
        if (r.seed == 0) {
            for (double v : r.t_truth) reference += (reference.empty() ? "" : ", ") + fmt(v);
            o.require(all, "reference seed t vs truth (" + reference + ")");
        }
    }
    const double share = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
    o.require(share >= 0.9, "only " + std::to_string(inside) + " of " + std::to_string(total) + " t within 1.96");
    o.require(t < 900.0, "runtime " + fmt(t) + " s");

    std::string filtered;
    for (const auto& r : parse_simulation(slurp("filtered.txt"))) {
        filtered += "; " + r.mode + " beta (";
        for (std::size_t a = 0; a < r.beta.size(); ++a) filtered += (a ? ", " : "") + fmt(r.beta[a]);
        filtered += ")";
    }
    const std::string summary = "reference t (" + reference + "), " + std::to_string(inside) + "/" +
                                std::to_string(total) + " coefficient t within 1.96, " + std::to_string(sets) +
                                "/20 seeds with all three" + filtered + "; training " + fmt(train_time) + " s, total " +
                                fmt(t) + " s";
    o.detail = o.pass ? summary : o.detail + " [" + summary + "]";
    return o;
}

Outcome determinism() {
    Outcome o;
    std::ofstream(work / "small.json") << R"({
  "seed": 5,
  "paths": {"corpus": "d_corpus.csv", "checkpoint": "d_model.bin", "trace": "d_trace.csv", "choice_sets": "d_sets.csv"},
  "synth": {"observations": 200},
  "vae": {"max_iterations": 100, "mc_draws": 10, "encoder_hidden_layers": 1, "decoder_hidden_layers": 1,
          "hidden_width": 8},
  "search": {"trials": 2},
  "generate": {"bc_draws": 10, "membership_draws": 10},
  "experiment": {"observations": 50, "pilot_draws": 100, "bc_draws": 10, "membership_draws": 10,
                 "threshold_quantile": 0.5},
  "verify": {"instances": 20}
})";
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
        {"synth", {"d_corpus.csv", "d_corpus.csv.meta.json"}},
        {"train", {"d_model.bin", "d_trace.csv"}},
        {"search --save-best d_best.bin", {"d_best.bin"}},
        {"generate", {"d_sets.csv"}},
        {"estimate", {}},
        {"evaluate", {}},
        {"simulate", {}},
        {"verify-gev", {}},
    };
    std::size_t compared = 0;
    for (const auto& [args, files] : commands) {
        const std::string name = args.substr(0, args.find(' '));
        std::vector<std::string> outputs = files;
        outputs.push_back("d_report.txt");
        std::vector<std::string> first;
        for (int pass = 0; pass < 2; ++pass) {
            const int rc = run("--config small.json --workers 1 " + args + " --report d_report.txt");
            o.require(rc == 0, name + " exited with " + std::to_string(rc));
            for (std::size_t i = 0; i < outputs.size(); ++i) {
                const auto bytes = slurp(outputs[i]);
                if (pass == 0) {
                    o.require(!bytes.empty(), name + " wrote nothing to " + outputs[i]);
                    first.push_back(bytes);
                } else {
                    ++compared;
                    o.require(bytes == first[i], name + " output " + outputs[i] + " differs on rerun");
                }
            }
        }
    }
    if (o.pass) o.detail = "8 commands, " + std::to_string(compared) + " output files identical on rerun";
    return o;
}

Outcome round_trips() {
    Outcome o;
    // Positive absolute data away from the clamp.
    Rng rng(31);
    DenseMatrix rows(500, 9);
    for (double& v : rows.entries()) v = 0.5 + 3.0 * rng.uniform();
    const auto norm = data::Normalization::fit(rows);
    const auto back = data::denormalize(data::normalize(rows, norm), norm);
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.entries().size(); ++i)
        worst = std::max(worst, std::abs(back.entries()[i] - rows.entries()[i]));
    o.require(worst < 1e-12, "normalize/denormalize error " + fmt(worst));

    auto corpus = data::split(data::synth_corpus(1000, 8), 0.8, 9);
    data::save_corpus(work / "round.csv", corpus);
    const auto loaded = data::load_corpus(work / "round.csv");
    o.require(loaded.rows == corpus.rows, "CSV rows differ after a round trip");
    o.require(loaded.assignment == corpus.assignment, "split assignment differs after a round trip");
    o.require(loaded.normalization == corpus.normalization, "normalization differs after a round trip");

    const auto train = corpus.indices(data::Partition::train);
    const auto test = corpus.indices(data::Partition::test);
    std::vector<std::size_t> all = train;
    all.insert(all.end(), test.begin(), test.end());
    std::sort(all.begin(), all.end());
    bool partition = train.size() == 800 && all.size() == 1000;
    for (std::size_t i = 0; i < all.size() && partition; ++i) partition = all[i] == i;
    o.require(partition, "split is not a partition with floor(0.8 n) training rows");

    // Means and standard deviations of the nine route attributes.
    const double table1[9][2] = {{0.18, 0.07}, {1.11, 0.21}, {1.08, 0.17}, {4.42, 2.21}, {0.1, 0.19},
                                 {1.85, 0.61}, {0.71, 0.29}, {0.11, 0.09}, {1.06, 0.39}};
    const auto big = data::synth_corpus(100000, 123);
    const auto fit = data::Normalization::fit(big.rows);
    double worst_rel = 0.0;
    for (std::size_t d = 0; d < 9; ++d) {
        worst_rel = std::max({worst_rel, std::abs(fit.mean[d] - table1[d][0]) / table1[d][0],
                              std::abs(fit.std[d] - table1[d][1]) / table1[d][1]});
    }
    o.require(worst_rel < 0.02, "synthetic calibration off by " + fmt(100.0 * worst_rel) + "%");
    if (o.pass)
        o.detail = "normalize round trip " + fmt(worst) + ", CSV bit-exact, split partition ok, calibration within " +
                   fmt(100.0 * worst_rel) + "%";
    return o;
}

}  // namespace

int main() {
    fs::remove_all(work);
    fs::create_directories(work);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 generation-function axioms", gev_axioms},
        {"2 collapse equivalences", collapse},
        {"3 gradient correctness", gradients},
        {"4 importance-weighted bound behavior", iwae_bound},
        {"5 consistency experiment", consistency},
        {"6 pipeline determinism", determinism},
        {"7 data round trips", round_trips},
    };
    bool all = true;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
