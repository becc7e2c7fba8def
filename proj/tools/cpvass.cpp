#include <cpvass/generate.hpp>
#include <cpvass/io.hpp>
#include <cpvass/solver.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace cpv;

namespace {

enum Exit { Positive = 0, Negative = 1, TimedOut = 2, Malformed = 64, Schema = 65, Failure = 70 };

int exit_for(Outcome o)
{
    if (o == Outcome::Timeout)
        return TimedOut;
    return is_positive(o) ? Positive : Negative;
}

struct SolveArgs {
    std::string mode;
    std::string in;
    std::string targetState;
    std::size_t maxTrees = 2000000;
    double timeout = 0;
    std::string certificate;
    std::string witness;
    int jobs = 1;
};

int cmd_solve(const SolveArgs& a)
{
    Instance inst = load_instance(a.in);
    const Machine& m = inst.machine;
    if (m.model != Model::Qvass && m.model != Model::Qpvass)
        throw SchemaError(std::string("solve needs a qvass or qpvass instance, not ") + model_name(m.model));
    SolverOptions opt;
    opt.maxTrees = a.maxTrees;
    opt.jobs = a.jobs;
    if (a.timeout > 0)
        opt.timeout = std::chrono::milliseconds(static_cast<long>(a.timeout * 1000));
    Verdict v;
    if (a.mode == "state") {
        int q = inst.fin.state;
        if (!a.targetState.empty()) {
            q = m.state_index(a.targetState);
            if (q < 0)
                throw SchemaError("undeclared target state " + a.targetState);
        }
        v = decide_state_reach(m, inst.init, q, opt);
    } else if (a.mode == "reach") {
        v = decide_reach(m, inst.init, inst.fin, opt);
    } else {
        v = decide_cover(m, inst.init, inst.fin, opt);
    }
    std::cout << outcome_name(v.outcome) << "\n";
    if (!v.note.empty())
        std::cerr << "note: " << v.note << "\n";
    if (v.witness) {
        std::cerr << "witness: " << v.witness->size() << " steps\n";
        if (!a.witness.empty())
            save_witness(a.witness, m, *v.witness);
    }
    if (v.certificate && !a.certificate.empty())
        write_file(a.certificate, v.certificate->dump());
    return exit_for(v.outcome);
}

int cmd_check(const std::string& in, const std::string& witnessPath)
{
    Instance inst = load_instance(in);
    const Machine& m = inst.machine;
    FiringSequence seq = load_witness(m, witnessPath);
    try {
        Config end = check_run(m, inst.init, seq);
        std::cout << "OK " << config_str(m, end) << "\n";
        if (end == inst.fin)
            std::cerr << "target reached\n";
        else if (end.state == inst.fin.state && end.stack == inst.fin.stack && vec_geq(end.values, inst.fin.values))
            std::cerr << "target covered\n";
        else
            std::cerr << "target missed\n";
        return Positive;
    } catch (const StepError& e) {
        std::cout << "FAIL step " << e.stepIndex << ": " << e.what() << "\n";
        return Negative;
    }
}

int cmd_gen(const std::string& chain, const std::vector<std::string>& rawParams, const std::string& out,
            std::uint64_t seed)
{
    GenParams p;
    for (auto& kv : rawParams) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("parameters are written key=value: " + kv);
        p[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    Generated g = generate(chain, p, seed);
    std::filesystem::create_directories(out);
    for (auto& f : g.files) {
        auto base = std::filesystem::path(out) / f.name;
        save_instance(base.string() + ".json", f.instance);
        std::string line = f.name + ".json";
        if (f.witness) {
            save_witness(base.string() + ".witness.json", f.instance.machine, *f.witness);
            line += " " + f.name + ".witness.json";
        }
        std::cout << line << "\n";
    }
    std::cout << (g.positive ? "POSITIVE" : "NEGATIVE") << "\n";
    return Positive;
}

int cmd_oracle(const std::string& in, int maxLen, bool force, const std::string& mode)
{
    if (maxLen > 12 && !force) {
        std::cerr << "refusing --max-len " << maxLen << " above 12 without --force\n";
        return Failure;
    }
    Instance inst = load_instance(in);
    const Machine& m = inst.machine;
    if (m.model != Model::Qvass && m.model != Model::Qpvass)
        throw SchemaError(std::string("oracle needs a qvass or qpvass instance, not ") + model_name(m.model));
    auto w = bounded_search(m, inst.init, inst.fin, mode == "cover" ? Mode::Cover : Mode::Reach, maxLen);
    if (w) {
        std::cout << "REACHABLE-UP-TO-BOUND\n";
        std::cerr << "witness: " << w->size() << " steps\n";
        return Positive;
    }
    std::cout << "NO-WITNESS-UP-TO-BOUND\n";
    return Negative;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact decision procedures and reduction-chain generators for continuous pushdown VASS"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "decide reachability, coverability or state reachability");
    solve->add_option("--mode", sa.mode)->required()->check(CLI::IsMember({"reach", "cover", "state"}));
    solve->add_option("--in", sa.in, "instance file")->required();
    solve->add_option("--target-state", sa.targetState, "target state for --mode state");
    solve->add_option("--max-trees", sa.maxTrees);
    solve->add_option("--timeout", sa.timeout, "seconds");
    solve->add_option("--emit-certificate", sa.certificate, "write the satisfying tree and model here");
    solve->add_option("--emit-witness", sa.witness, "write the firing sequence here");
    solve->add_option("--jobs", sa.jobs)->check(CLI::PositiveNumber);

    std::string checkIn, checkWitness;
    auto* check = app.add_subcommand("check", "replay a witness on an instance");
    check->add_option("--in", checkIn)->required();
    check->add_option("--witness", checkWitness)->required();

    std::string chain, out;
    std::vector<std::string> params;
    std::uint64_t seed = 0;
    auto* gen = app.add_subcommand("gen", "generate reduction-chain instances");
    gen->add_option("--chain", chain)->required()->check(CLI::IsMember(generator_chains()));
    gen->add_option("--params", params, "key=value pairs");
    gen->add_option("--out", out)->required();
    gen->add_option("--seed", seed);

    std::string oracleIn, oracleMode = "reach";
    int maxLen = 6;
    bool force = false;
    auto* oracle = app.add_subcommand("oracle", "bounded search for a witness");
    oracle->add_option("--in", oracleIn)->required();
    oracle->add_option("--max-len", maxLen)->required()->check(CLI::NonNegativeNumber);
    oracle->add_option("--mode", oracleMode)->check(CLI::IsMember({"reach", "cover"}));
    oracle->add_flag("--force", force);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve)
            return cmd_solve(sa);
        if (*check)
            return cmd_check(checkIn, checkWitness);
        if (*gen)
            return cmd_gen(chain, params, out, seed);
        return cmd_oracle(oracleIn, maxLen, force, oracleMode);
    } catch (const MalformedFile& e) {
        std::cerr << "malformed file: " << e.what() << "\n";
        return Malformed;
    } catch (const SchemaError& e) {
        std::cerr << "schema violation: " << e.what() << "\n";
        return Schema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Failure;
    }
}
