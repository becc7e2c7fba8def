#pragma once

// JSON instance and witness files. Every number is a decimal string; rule
// references use rule ids and state/stack references use names.

#include "machines.hpp"
#include "numerics.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cpv {

using Json = nlohmann::ordered_json;

// unreadable file or invalid JSON
struct MalformedFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// well-formed JSON that is not a valid instance or witness
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Instance {
    Machine machine;
    Config init;
    Config fin;
    std::optional<Integer> runLength;
    Json provenance; // null when absent
};

namespace io_detail {

inline const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

inline std::string str(const Json& j, const char* what)
{
    if (!j.is_string())
        throw SchemaError(std::string(what) + " must be a string");
    return j.get<std::string>();
}

inline Rational rational(const Json& j, const char* what)
{
    try {
        return rat_parse(str(j, what));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    } catch (const std::domain_error& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    }
}

inline Integer integer(const Json& j, const char* what)
{
    try {
        return int_parse(str(j, what));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    }
}

inline std::vector<std::string> split_words(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

inline Model parse_model(const std::string& s)
{
    for (Model m : {Model::Qvass, Model::Qpvass, Model::IvassRl, Model::Tcm})
        if (s == model_name(m))
            return m;
    throw SchemaError("unknown model \"" + s + "\"");
}

inline TcmOp parse_tcm_op(const std::string& s)
{
    for (TcmOp op : {TcmOp::Inc0, TcmOp::Inc1, TcmOp::Double0, TcmOp::Double1, TcmOp::Nop})
        if (s == tcm_op_name(op))
            return op;
    throw SchemaError("unknown tcmOp \"" + s + "\"");
}

inline int state_ref(const Machine& m, const Json& j)
{
    std::string s = str(j, "state");
    int i = m.state_index(s);
    if (i < 0)
        throw SchemaError("undeclared state \"" + s + "\"");
    return i;
}

inline int symbol_ref(const Machine& m, const std::string& s)
{
    int i = m.symbol_index(s);
    if (i < 0)
        throw SchemaError("undeclared stack symbol \"" + s + "\"");
    return i;
}

inline std::string stack_effect_str(const Machine& m, const Rule& r)
{
    switch (r.op) {
    case StackOp::None: return "none";
    case StackOp::Push: return "push(" + m.stackAlphabet.at(r.symbol) + ")";
    case StackOp::Pop: return "pop(" + m.stackAlphabet.at(r.symbol) + ")";
    }
    return "none";
}

inline void parse_stack_effect(const Machine& m, const std::string& s, Rule& r)
{
    if (s == "none") {
        r.op = StackOp::None;
        return;
    }
    for (auto [name, op] : {std::pair{"push(", StackOp::Push}, std::pair{"pop(", StackOp::Pop}}) {
        std::string p = name;
        if (s.size() > p.size() + 1 && s.compare(0, p.size(), p) == 0 && s.back() == ')') {
            r.op = op;
            r.symbol = symbol_ref(m, s.substr(p.size(), s.size() - p.size() - 1));
            return;
        }
    }
    throw SchemaError("bad stackEffect \"" + s + "\"");
}

inline Config parse_config(const Machine& m, const Json& j)
{
    Config c;
    c.state = state_ref(m, field(j, "state"));
    const Json& st = j.contains("stack") ? j.at("stack") : Json("");
    for (auto& w : split_words(str(st, "stack")))
        c.stack.push_back(symbol_ref(m, w));
    const Json& vals = field(j, "values");
    if (!vals.is_array() || static_cast<int>(vals.size()) != m.dim)
        throw SchemaError("config values must be an array of " + std::to_string(m.dim) + " rationals");
    for (auto& v : vals) {
        Rational r = rational(v, "config value");
        if (sgn(r) < 0)
            throw SchemaError("config value " + rat_str(r) + " is negative");
        c.values.push_back(r);
    }
    return c;
}

inline Json config_json(const Machine& m, const Config& c)
{
    std::string stack;
    for (int s : c.stack)
        stack += (stack.empty() ? "" : " ") + m.stackAlphabet.at(s);
    Json vals = Json::array();
    for (auto& v : c.values)
        vals.push_back(rat_str(v));
    return Json{{"state", m.states.at(c.state)}, {"stack", stack}, {"values", vals}};
}

} // namespace io_detail

inline Json parse_json_text(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw MalformedFile(std::string("invalid JSON: ") + e.what());
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MalformedFile("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

inline Instance instance_from_json(const Json& j)
{
    using namespace io_detail;
    if (!j.is_object())
        throw SchemaError("instance must be a JSON object");
    Instance inst;
    Machine& m = inst.machine;
    m.model = parse_model(str(field(j, "model"), "model"));
    const Json& dim = field(j, "dimension");
    if (!dim.is_number_unsigned() && !(dim.is_number_integer() && dim.get<long>() >= 0))
        throw SchemaError("dimension must be a nonnegative integer");
    m.dim = dim.get<int>();
    const Json& states = field(j, "states");
    if (!states.is_array() || states.empty())
        throw SchemaError("states must be a nonempty array");
    for (auto& s : states) {
        std::string name = str(s, "state name");
        if (m.state_index(name) >= 0)
            throw SchemaError("duplicate state \"" + name + "\"");
        m.add_state(name);
    }
    if (j.contains("stackAlphabet")) {
        const Json& sa = j.at("stackAlphabet");
        if (!sa.is_array())
            throw SchemaError("stackAlphabet must be an array");
        for (auto& s : sa) {
            std::string name = str(s, "stack symbol");
            if (name.empty() || split_words(name).size() != 1 || name.find_first_of("()") != std::string::npos)
                throw SchemaError("stack symbol \"" + name + "\" must be one word without parentheses");
            if (m.symbol_index(name) >= 0)
                throw SchemaError("duplicate stack symbol \"" + name + "\"");
            m.add_symbol(name);
        }
    }
    const Json& rules = field(j, "rules");
    if (!rules.is_array())
        throw SchemaError("rules must be an array");
    for (auto& rj : rules) {
        Rule r;
        r.id = rj.contains("id") ? str(rj.at("id"), "rule id") : "r" + std::to_string(m.rules.size());
        r.from = state_ref(m, field(rj, "from"));
        r.to = state_ref(m, field(rj, "to"));
        const Json& up = field(rj, "update");
        if (!up.is_array() || static_cast<int>(up.size()) != m.dim)
            throw SchemaError("rule " + r.id + ": update must have " + std::to_string(m.dim) + " entries");
        for (auto& x : up)
            r.update.push_back(integer(x, "update entry"));
        parse_stack_effect(m, rj.contains("stackEffect") ? str(rj.at("stackEffect"), "stackEffect") : "none", r);
        if (rj.contains("zeroTests")) {
            const Json& zt = rj.at("zeroTests");
            if (!zt.is_array())
                throw SchemaError("rule " + r.id + ": zeroTests must be an array");
            for (auto& z : zt) {
                if (!z.is_number_integer() || z.get<long>() < 1 || z.get<long>() > m.dim)
                    throw SchemaError("rule " + r.id + ": zero tests are counter numbers 1.." + std::to_string(m.dim));
                r.zeroTests.push_back(z.get<int>() - 1);
            }
        }
        if (rj.contains("tcmOp")) {
            if (m.model != Model::Tcm)
                throw SchemaError("rule " + r.id + ": tcmOp outside a tcm model");
            r.tcmOp = parse_tcm_op(str(rj.at("tcmOp"), "tcmOp"));
        } else if (m.model == Model::Tcm) {
            throw SchemaError("rule " + r.id + ": tcm rules need a tcmOp");
        }
        m.rules.push_back(std::move(r));
    }
    const Json& configs = field(j, "configs");
    inst.init = parse_config(m, field(configs, "init"));
    inst.fin = parse_config(m, field(configs, "final"));
    if (m.model == Model::Tcm) {
        m.initial = inst.init.state;
        m.final = inst.fin.state;
    }
    if (j.contains("runLength")) {
        inst.runLength = integer(j.at("runLength"), "runLength");
        if (sgn(*inst.runLength) < 0)
            throw SchemaError("runLength must be nonnegative");
    }
    if (j.contains("provenance"))
        inst.provenance = j.at("provenance");
    if (m.model != Model::Qpvass && (!inst.init.stack.empty() || !inst.fin.stack.empty()))
        throw SchemaError("stack contents on a stackless model");
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return inst;
}

// Canonical form: fixed key order, two-space indentation, trailing newline.
inline Json instance_to_json(const Instance& inst)
{
    using namespace io_detail;
    const Machine& m = inst.machine;
    Json j;
    if (!inst.provenance.is_null())
        j["provenance"] = inst.provenance;
    j["model"] = model_name(m.model);
    j["dimension"] = m.dim;
    j["states"] = m.states;
    j["stackAlphabet"] = m.stackAlphabet;
    Json rules = Json::array();
    for (auto& r : m.rules) {
        Json up = Json::array();
        for (auto& x : r.update)
            up.push_back(int_str(x));
        Json rj{{"id", r.id}, {"from", m.states[r.from]}, {"to", m.states[r.to]}, {"update", up},
                {"stackEffect", stack_effect_str(m, r)}};
        Json zt = Json::array();
        for (int z : r.zeroTests)
            zt.push_back(z + 1);
        rj["zeroTests"] = zt;
        if (m.model == Model::Tcm)
            rj["tcmOp"] = tcm_op_name(r.tcmOp);
        rules.push_back(rj);
    }
    j["rules"] = rules;
    j["configs"] = Json{{"init", config_json(m, inst.init)}, {"final", config_json(m, inst.fin)}};
    if (inst.runLength)
        j["runLength"] = int_str(*inst.runLength);
    return j;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline Instance load_instance(const std::string& path) { return instance_from_json(parse_json_text(read_file(path))); }

inline void save_instance(const std::string& path, const Instance& inst)
{
    write_file(path, dump_json(instance_to_json(inst)));
}

inline FiringSequence witness_from_json(const Machine& m, const Json& j)
{
    using namespace io_detail;
    if (!j.is_array())
        throw SchemaError("witness must be a JSON array");
    FiringSequence seq;
    for (auto& s : j) {
        Rational a = rational(field(s, "fraction"), "fraction");
        if (sgn(a) <= 0 || a > 1)
            throw SchemaError("fraction " + rat_str(a) + " is outside (0,1]");
        std::string id = str(field(s, "rule"), "rule");
        int r = m.rule_index(id);
        if (r < 0)
            throw SchemaError("unknown rule \"" + id + "\"");
        seq.push_back({a, r});
    }
    return seq;
}

inline Json witness_to_json(const Machine& m, const FiringSequence& seq)
{
    Json j = Json::array();
    for (auto& s : seq)
        j.push_back(Json{{"fraction", rat_str(s.fraction)}, {"rule", m.rules.at(s.rule).id}});
    return j;
}

inline FiringSequence load_witness(const Machine& m, const std::string& path)
{
    return witness_from_json(m, parse_json_text(read_file(path)));
}

inline void save_witness(const std::string& path, const Machine& m, const FiringSequence& seq)
{
    write_file(path, dump_json(witness_to_json(m, seq)));
}

inline Json provenance(const std::string& chain, const Json& params, std::uint64_t seed)
{
    return Json{{"chain", chain}, {"params", params}, {"seed", std::to_string(seed)}};
}

} // namespace cpv
