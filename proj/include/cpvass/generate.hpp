#pragma once

// Instance generators for the reduction chains, as used by `cpvass gen`.

#include "io.hpp"
#include "reductions.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace cpv {

struct GeneratedFile {
    std::string name; // file stem, e.g. "instance" or "ivass"
    Instance instance;
    std::optional<FiringSequence> witness;
};

struct Generated {
    std::vector<GeneratedFile> files; // the last one is the chain's output
    bool positive = false;
};

using GenParams = std::map<std::string, std::string>;

namespace gen_detail {

inline const std::string& param(const GenParams& p, const std::string& key)
{
    auto it = p.find(key);
    if (it == p.end())
        throw std::invalid_argument("missing parameter " + key);
    return it->second;
}

inline std::string param_or(const GenParams& p, const std::string& key, const std::string& dflt)
{
    auto it = p.find(key);
    return it == p.end() ? dflt : it->second;
}

inline Integer int_param(const GenParams& p, const std::string& key, long lo)
{
    Integer v = int_parse(param(p, key));
    if (v < lo)
        throw std::invalid_argument("parameter " + key + " must be at least " + std::to_string(lo));
    return v;
}

inline std::vector<Integer> int_list(const std::string& s)
{
    std::vector<Integer> out;
    std::stringstream in(s);
    for (std::string x; std::getline(in, x, ',');)
        out.push_back(int_parse(x));
    if (out.empty())
        throw std::invalid_argument("empty list");
    return out;
}

inline void check_known(const GenParams& p, std::initializer_list<const char*> known)
{
    for (auto& [k, v] : p) {
        bool ok = false;
        for (auto* n : known)
            ok = ok || k == n;
        if (!ok)
            throw std::invalid_argument("unknown parameter " + k);
    }
}

inline Json params_json(const GenParams& p)
{
    Json j = Json::object();
    for (auto& [k, v] : p)
        j[k] = v;
    return j;
}

inline Instance make_instance(const RunLengthInstance& r, const std::string& chain, const std::string& stage,
                              const GenParams& p, std::uint64_t seed)
{
    Instance inst{r.machine, r.init, r.fin, r.steps, provenance(chain, params_json(p), seed)};
    inst.provenance["stage"] = stage;
    inst.provenance["semantics"] = r.cover ? "cover" : "reach";
    return inst;
}

inline FiringSequence tcm_witness(const std::vector<int>& run)
{
    FiringSequence seq;
    for (int r : run)
        seq.push_back({Rational(1), r});
    return seq;
}

// TCM -> IVASS_RL -> Q+-VASS_RL -> Q+-PVASS, one file per stage.
inline void tcm_chain(Generated& g, const Machine& tcm, long m, const std::string& chain, const GenParams& p,
                      std::uint64_t seed)
{
    auto run = tcm_search(tcm, m);
    g.positive = run.has_value();
    RunLengthInstance t{tcm, Config{tcm.initial, {}, RatVector(2)}, Config{tcm.final, {}, RatVector(2)}, m};
    Instance ti = make_instance(t, chain, "tcm", p, seed);
    g.files.push_back({"tcm", ti, run ? std::optional(tcm_witness(*run)) : std::nullopt});

    TcmEncoding a = tcm_to_ivass(tcm, m);
    std::optional<FiringSequence> wa, wb, wc;
    if (run)
        wa = a.translate(tcm, *run);
    g.files.push_back({"ivass", make_instance(a.inst, chain, "ivass_rl", p, seed), wa});

    ComplementEncoding b = ivass_to_cvassrl(a.inst);
    if (wa)
        wb = b.translate(*wa);
    g.files.push_back({"qvass", make_instance(b.inst, chain, "qvass", p, seed), wb});

    ProductEncoding c = cvassrl_to_cpvass(b.inst);
    if (wb)
        wc = c.translate(*wb);
    RunLengthInstance ci{c.machine, c.init, c.fin, b.inst.steps};
    g.files.push_back({"instance", make_instance(ci, chain, "qpvass", p, seed), wc});
}

inline BoundedPcp pcp_params(const GenParams& p, std::uint64_t seed)
{
    BoundedPcp pcp;
    pcp.bound = int_param(p, "bound", 1);
    auto pairs = param_or(p, "pairs", "");
    if (pairs.empty()) {
        // random instance over {a,b}
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> n(1, 3), len(1, 2), letter(0, 1);
        auto word = [&] {
            std::string w;
            for (int i = len(rng); i > 0; --i)
                w += static_cast<char>('a' + letter(rng));
            return w;
        };
        for (int i = n(rng); i > 0; --i)
            pcp.pairs.emplace_back(word(), word());
        return pcp;
    }
    std::stringstream in(pairs);
    for (std::string x; std::getline(in, x, ',');) {
        auto colon = x.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("pairs are written u:v separated by commas");
        pcp.pairs.emplace_back(x.substr(0, colon), x.substr(colon + 1));
    }
    return pcp;
}

} // namespace gen_detail

inline const std::vector<std::string>& generator_chains()
{
    static const std::vector<std::string> names{"tcm-full", "pcp-full", "pda-counter", "amplifier", "unary-hardened"};
    return names;
}

// Parameters:
//   tcm-full        m (run length; the example TCM)
//   pcp-full        bound, pairs (u:v,u:v,...; random over {a,b} from the seed when absent)
//   pda-counter     m
//   amplifier       p (comma-separated), k, variant (ivass|qvass)
//   unary-hardened  m (the example TCM through the full unary construction)
inline Generated generate(const std::string& chain, const GenParams& p, std::uint64_t seed)
{
    using namespace gen_detail;
    Generated g;
    if (chain == "tcm-full") {
        check_known(p, {"m"});
        tcm_chain(g, example_tcm(), small_steps(int_param(p, "m", 1)), chain, p, seed);
    } else if (chain == "pcp-full") {
        check_known(p, {"bound", "pairs"});
        BoundedPcp pcp = pcp_params(p, seed);
        PcpEncoding enc = pcp_to_tcm(pcp);
        GenParams q = p;
        std::string pairs;
        for (auto& [u, v] : pcp.pairs)
            pairs += (pairs.empty() ? "" : ",") + u + ":" + v;
        q["pairs"] = pairs;
        tcm_chain(g, enc.tcm, small_steps(enc.steps), chain, q, seed);
        if (g.positive != solve_bounded_pcp(pcp).has_value())
            throw std::logic_error("TCM search disagrees with the bounded PCP solution");
    } else if (chain == "pda-counter") {
        check_known(p, {"m"});
        PdaCounter pc = pda_counter(int_param(p, "m", 1));
        RunLengthInstance r{pc.pda, pc.start, pc.end, pc.length};
        g.positive = true;
        g.files.push_back({"instance", make_instance(r, chain, "qpvass", p, seed), tcm_witness(pda_run(pc))});
    } else if (chain == "amplifier") {
        check_known(p, {"p", "k", "variant"});
        auto values = int_list(param(p, "p"));
        long k = small_steps(int_param(p, "k", 0));
        std::string variant = param_or(p, "variant", "ivass");
        Amplifier a;
        if (variant == "ivass")
            a = ivass_amplifier(values, static_cast<int>(k));
        else if (variant == "qvass")
            a = qvass_amplifier(values, static_cast<int>(k));
        else
            throw std::invalid_argument("variant must be ivass or qvass");
        g.positive = true;
        g.files.push_back({"instance", make_instance(a.inst, chain, variant, p, seed), a.run});
    } else if (chain == "unary-hardened") {
        check_known(p, {"m"});
        long m = small_steps(int_param(p, "m", 1));
        Machine t = example_tcm();
        auto run = tcm_search(t, m);
        TcmEncoding a = tcm_to_ivass(t, m);
        ComplementEncoding b = ivass_to_cvassrl(a.inst);
        SuperEncoding s = structured_to_superstructured(b.inst);
        UnaryEncoding u = assemble_unary_instance(s.inst);
        g.positive = run.has_value();
        std::optional<FiringSequence> w;
        if (run)
            w = u.translate(s.translate(b.translate(a.translate(t, *run))));
        g.files.push_back({"instance", make_instance(u.inst, chain, "qvass", p, seed), w});
    } else {
        throw std::invalid_argument("unknown chain " + chain);
    }
    return g;
}

} // namespace cpv
