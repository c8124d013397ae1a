/*
 * Copyright 2026 The obsh Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "obsh/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "obsh/block_file.hpp"
#include "obsh/errors.hpp"
#include "obsh/experiment.hpp"
#include "obsh/obliv.hpp"
#include "obsh/oram.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string algo = "root";
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t d = 0;
    std::size_t s = 0;
    std::size_t l = 256;
    double epsilon = 0.5;
    std::uint64_t seed = 1;
    std::size_t batch = 1;
    double log_gate = 0.0;
    std::string cipher = "aes";
    bool json = false;
    std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_epsilon = true)
{
    cmd->add_option("--algo", a.algo, "root|recursive|basic|basic-broken|k|kroot|dummy");
    cmd->add_option("--n", a.n, "real blocks N")->required();
    cmd->add_option("--k", a.k, "touched blocks K");
    cmd->add_option("--d", a.d, "dummy blocks D");
    cmd->add_option("--s", a.s, "client budget S in blocks");
    cmd->add_option("--l", a.l, "partition size L (dummy)");
    if (with_epsilon)
        cmd->add_option("--epsilon", a.epsilon, "slack");
    cmd->add_option("--seed", a.seed, "base seed");
    cmd->add_option("--batch", a.batch, "Dest indices per roundtrip (basic)");
    cmd->add_option("--log-gate", a.log_gate, "reject S or L below this multiple of ln N (0 disables)");
    cmd->add_option("--cipher", a.cipher, "aes|passthrough")->check(CLI::IsMember({"aes", "passthrough"}));
    cmd->add_flag("--json", a.json, "JSON output");
    cmd->add_option("--out", a.out, "output path");
}

RunSpec to_spec(const CommonArgs& a)
{
    const auto algo = parse_algo(a.algo);
    if (!algo)
        throw std::invalid_argument("unknown algorithm '" + a.algo + "'");
    RunSpec s;
    s.algo = *algo;
    s.n = a.n;
    s.k = a.k;
    s.d = a.d;
    s.s = a.s;
    s.l = a.l;
    s.epsilon = a.epsilon;
    s.seed = a.seed;
    s.batch = a.batch;
    s.log_gate = a.log_gate;
    s.cipher_mode = a.cipher == "aes" ? CipherMode::kAesGcm : CipherMode::kPassthrough;
    validate(s);
    return s;
}

json metrics_json(const Metrics& m)
{
    return json{{"bandwidth", m.bandwidth_blocks},
                {"downloads", m.downloads},
                {"uploads", m.uploads},
                {"eval_coefficient_blocks", m.eval_coefficient_blocks},
                {"client_high_water", m.client_high_water},
                {"client_mean_held", m.client_mean_held},
                {"roundtrips", m.roundtrips},
                {"queue_max", m.queue_max},
                {"queue_mean", m.queue_mean},
                {"spray_rounds", m.spray_rounds},
                {"aborted", m.aborted}};
}

json report_json(const OblivReport& r)
{
    return json{{"algorithm", r.algorithm}, {"n", r.n},           {"k", r.k},
                {"trials", r.trials},       {"mode", r.mode},     {"statistic", r.statistic},
                {"p_value", r.p_value},     {"tv", r.tv},         {"positions", r.positions},
                {"aborted", r.aborted},     {"verdict", to_string(r.verdict)}, {"detail", r.detail}};
}

std::ostream& open_out(const std::string& path, std::ofstream& file, std::ostream& fallback)
{
    if (path.empty())
        return fallback;
    file.open(path, std::ios::trunc);
    if (!file)
        throw std::runtime_error("cannot open " + path + " for writing");
    return file;
}

int cmd_shuffle(const CommonArgs& a, const std::string& transcript_path, std::ostream& out)
{
    RunSpec spec = to_spec(a);
    std::ofstream tfile;
    if (!transcript_path.empty()) {
        tfile.open(transcript_path, std::ios::trunc);
        if (!tfile)
            throw std::runtime_error("cannot open " + transcript_path + " for writing");
        spec.transcript_stream = &tfile;
    }
    const auto res = run_once(spec);
    std::ofstream file;
    std::ostream& o = open_out(a.out, file, out);
    if (a.json) {
        json j{{"algo", algo_name(spec.algo)},
               {"n", spec.n},
               {"k", spec.k},
               {"d", spec.d},
               {"s", spec.s},
               {"l", spec.l},
               {"epsilon", spec.epsilon},
               {"seed", spec.seed},
               {"metrics", metrics_json(res.metrics)},
               {"bandwidth", res.metrics.bandwidth_blocks},
               {"aborted", res.aborted},
               {"misplaced", res.misplaced},
               {"runtime_ms", res.runtime_ms}};
        if (res.aborted)
            j["abort_reason"] = res.abort_reason;
        for (const auto& [key, v] : res.extra)
            j["extra"][key] = v;
        o << j.dump(2) << '\n';
    } else {
        o << algo_name(spec.algo) << " n=" << spec.n << " bandwidth=" << res.metrics.bandwidth_blocks
          << " high_water=" << res.metrics.client_high_water << " misplaced=" << res.misplaced
          << " runtime_ms=" << res.runtime_ms;
        if (res.aborted)
            o << " ABORTED: " << res.abort_reason;
        o << '\n';
    }
    if (res.misplaced != 0)
        throw std::logic_error("shuffle left " + std::to_string(res.misplaced) + " blocks misplaced");
    return res.aborted ? kExitAborted : kExitOk;
}

int cmd_oram(std::size_t n, std::size_t queries, std::uint64_t seed, const std::string& in, bool as_json,
             std::ostream& out)
{
    std::vector<std::vector<std::uint8_t>> payloads;
    if (!in.empty()) {
        payloads = read_block_file(in).payloads;
    } else {
        if (n == 0)
            throw std::invalid_argument("--n or --in is required");
        for (BlockId id = 1; id <= n; ++id)
            payloads.push_back(payload_for(id, kDefaultBlockSize));
    }
    OramOptions opts;
    opts.transcript = TranscriptMode::kOff;
    SquareRootOram oram(payloads, keygen(derive_seed(seed, 4)), seed, opts);
    SeededRng qrng(derive_seed(seed, 5));
    std::size_t wrong = 0;
    std::vector<std::uint64_t> rebuilds;
    for (std::size_t i = 0; i < queries; ++i) {
        const auto q = static_cast<BlockId>(1 + qrng.below(oram.size()));
        const auto before = oram.epochs_completed();
        if (oram.query(q).payload != payloads[q - 1])
            ++wrong;
        if (oram.epochs_completed() != before)
            rebuilds.push_back(oram.last_rebuild_bandwidth());
    }
    const auto total = oram.totals().bandwidth_blocks;
    const double amortized = queries == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(queries);
    if (as_json) {
        out << json{{"n", oram.size()},
                    {"queries", queries},
                    {"epoch_length", oram.epoch_length()},
                    {"epochs", oram.epochs_completed()},
                    {"bandwidth", total},
                    {"amortized_per_query", amortized},
                    {"rebuild_bandwidth", rebuilds},
                    {"wrong_answers", wrong}}
                   .dump(2)
            << '\n';
    } else {
        out << "oram n=" << oram.size() << " queries=" << queries << " epochs=" << oram.epochs_completed()
            << " bandwidth=" << total << " amortized=" << amortized << " wrong=" << wrong << '\n';
    }
    if (wrong != 0)
        throw std::logic_error("ORAM returned " + std::to_string(wrong) + " wrong blocks");
    return kExitOk;
}

int cmd_experiment(const CommonArgs& a, const std::vector<double>& eps, std::size_t seeds, std::ostream& out)
{
    ExperimentSpec es;
    es.base = to_spec(a);
    es.epsilons = eps.empty() ? std::vector<double>{a.epsilon} : eps;
    es.seeds = seeds;
    es.first_seed = a.seed;
    const auto rows = run_experiment(es);
    std::ofstream file;
    write_csv(open_out(a.out, file, out), rows);
    for (const auto& r : rows) {
        if (r.result.misplaced != 0)
            throw std::logic_error("experiment run left blocks misplaced");
        if (r.result.aborted)
            return kExitAborted;
    }
    return kExitOk;
}

int cmd_oblivtest(const CommonArgs& a, std::size_t trials, const std::string& mode, std::ostream& out)
{
    RunSpec run = to_spec(a);
    run.cipher_mode = CipherMode::kPassthrough;
    OblivReport rep;
    if (mode == "same-seed") {
        rep = same_seed_check(run, default_game(run), trials);
    } else if (mode == "uniformity") {
        rep = download_order_uniformity(run, trials);
    } else {
        OblivSpec spec;
        spec.run = run;
        spec.trials = trials;
        spec.allow_exact = mode != "statistical";
        rep = obliv_distance(spec);
    }
    std::ofstream file;
    std::ostream& o = open_out(a.out, file, out);
    if (a.json)
        o << report_json(rep).dump(2) << '\n';
    else
        o << to_string(rep.verdict) << ' ' << rep.algorithm << " n=" << rep.n << " k=" << rep.k
          << " mode=" << rep.mode << " trials=" << rep.trials << " p=" << rep.p_value << " tv=" << rep.tv << " ("
          << rep.detail << ")\n";
    switch (rep.verdict) {
    case Verdict::kPass:
        return kExitOk;
    case Verdict::kInconclusive:
        return kExitAborted;
    case Verdict::kFail:
        break;
    }
    return kExitVerdictFail;
}

int cmd_ingest(const std::string& in, const std::string& out_path, bool as_json, std::ostream& out)
{
    const auto file = read_block_file(in);
    if (!out_path.empty())
        write_block_file(out_path, file);
    std::uint64_t digest = derive_seed(file.block_size, file.payloads.size());
    for (const auto& p : file.payloads)
        for (auto byte : p)
            digest = derive_seed(digest, byte);
    std::ostringstream hex;
    hex << std::hex << digest;
    if (as_json)
        out << json{{"n", file.payloads.size()}, {"block_size", file.block_size}, {"digest", hex.str()}}.dump(2)
            << '\n';
    else
        out << "blocks=" << file.payloads.size() << " block_size=" << file.block_size << " digest=" << hex.str()
            << '\n';
    return kExitOk;
}

} // namespace

int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Oblivious shuffles and square-root ORAM over a simulated server", "obsh"};
    app.require_subcommand(1);

    CommonArgs shuffle_args;
    std::string transcript_path;
    auto* shuffle = app.add_subcommand("shuffle", "run one shuffle and report its metrics");
    add_common(shuffle, shuffle_args);
    shuffle->add_option("--transcript", transcript_path, "write the move transcript to this file");

    std::size_t oram_n = 0;
    std::size_t oram_queries = 0;
    std::uint64_t oram_seed = 1;
    std::string oram_in;
    bool oram_json = false;
    auto* oram = app.add_subcommand("oram", "run random queries against a square-root ORAM");
    oram->add_option("--n", oram_n, "blocks");
    oram->add_option("--queries", oram_queries, "query count")->required();
    oram->add_option("--seed", oram_seed, "seed");
    oram->add_option("--in", oram_in, "block file to load");
    oram->add_flag("--json", oram_json, "JSON output");

    CommonArgs exp_args;
    std::vector<double> exp_eps;
    std::size_t exp_seeds = 10;
    auto* experiment = app.add_subcommand("experiment", "sweep epsilon and seeds, emit CSV");
    add_common(experiment, exp_args, false);
    experiment->add_option("--epsilon", exp_eps, "one or more slack values")->expected(1, -1);
    experiment->add_option("--seeds", exp_seeds, "seeds per epsilon");

    CommonArgs obl_args;
    std::size_t obl_trials = 100000;
    std::string obl_mode = "auto";
    auto* oblivtest = app.add_subcommand("oblivtest", "compare transcript distributions under two sigmas");
    add_common(oblivtest, obl_args);
    oblivtest->add_option("--trials", obl_trials, "runs per sigma");
    oblivtest->add_option("--mode", obl_mode, "auto|statistical|same-seed|uniformity")
        ->check(CLI::IsMember({"auto", "statistical", "same-seed", "uniformity"}));

    std::string ingest_in;
    std::string ingest_out;
    bool ingest_json = false;
    auto* ingest = app.add_subcommand("ingest", "validate a block file");
    ingest->add_option("--in", ingest_in, "block file")->required();
    ingest->add_option("--out", ingest_out, "re-serialize to this path");
    ingest->add_flag("--json", ingest_json, "JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (shuffle->parsed())
            return cmd_shuffle(shuffle_args, transcript_path, out);
        if (oram->parsed())
            return cmd_oram(oram_n, oram_queries, oram_seed, oram_in, oram_json, out);
        if (experiment->parsed())
            return cmd_experiment(exp_args, exp_eps, exp_seeds, out);
        if (oblivtest->parsed())
            return cmd_oblivtest(obl_args, obl_trials, obl_mode, out);
        if (ingest->parsed())
            return cmd_ingest(ingest_in, ingest_out, ingest_json, out);
    } catch (const std::invalid_argument& e) {
        err << "obsh: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "obsh: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        // file I/O
        err << "obsh: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace obsh
