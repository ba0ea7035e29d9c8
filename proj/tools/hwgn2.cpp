#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hwgn2/assembler.hpp"
#include "hwgn2/channel.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/leakage.hpp"
#include "hwgn2/model.hpp"
#include "hwgn2/model_io.hpp"
#include "hwgn2/netlist_io.hpp"
#include "hwgn2/nncompile.hpp"
#include "hwgn2/protocol.hpp"

using namespace hwgn2;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Raised for failures after a session or campaign has started.
struct RunFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error("cannot write " + path.string());
}

Seed parse_seed(const std::string& text) {
  if (text.empty()) return random_seed();
  if (text.size() == 64) return seed_from_hex(text);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw ValidationError("--seed takes 64 hex digits or an integer");
  return seed_from_u64(v);
}

ot::Profile profile_from_env() {
  const char* v = std::getenv("HWGN2_PROFILE");
  if (!v || std::string_view(v) == "secure") return ot::Profile::Secure;
  if (std::string_view(v) == "test") return ot::Profile::Test;
  throw ValidationError("HWGN2_PROFILE must be 'test' or 'secure'");
}

/// Whitespace-separated words: integers (decimal, 0x hex, negative allowed)
/// or Q8.8 decimals containing a point. '#' starts a comment.
std::vector<std::uint32_t> read_words(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::uint32_t> words;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream toks(line);
    std::string tok;
    while (toks >> tok) {
      try {
        if (tok.find('.') != std::string::npos) {
          words.push_back(static_cast<std::uint32_t>(nn::parse_fixed(tok)));
          continue;
        }
        std::size_t used = 0;
        const long long v = std::stoll(tok, &used, 0);
        if (used != tok.size() || v < INT32_MIN || v > static_cast<long long>(UINT32_MAX)) throw Error("");
        words.push_back(static_cast<std::uint32_t>(v));
      } catch (const std::exception&) {
        throw ParseError("bad input word '" + tok + "' in " + path.string(), line_no);
      }
    }
  }
  return words;
}

mips::MipsProgram load_program(const fs::path& path) {
  try {
    return mips::assemble(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.what(), 0);
  }
}

Json stats_json(const protocol::CommStats& s) {
  return Json{{"ot_rounds", s.ot_rounds},
              {"bytes_garbler_to_evaluator", s.bytes_garbler_to_evaluator},
              {"bytes_evaluator_to_garbler", s.bytes_evaluator_to_garbler},
              {"peak_resident_tables", s.peak_resident_tables},
              {"peak_resident_labels", s.peak_resident_labels}};
}

Json side_info_json(const protocol::SideInfo& p) {
  return Json{{"step_count", p.step_count},       {"netlist_inputs", p.netlist_inputs},
              {"netlist_outputs", p.netlist_outputs}, {"netlist_gates", p.netlist_gates},
              {"netlist_nonfree_gates", p.netlist_nonfree_gates}, {"input_words", p.input_words},
              {"output_words", p.output_words}};
}

Json signed_words(const std::vector<std::uint32_t>& words) {
  Json out = Json::array();
  for (auto w : words) out.push_back(static_cast<std::int32_t>(w));
  return out;
}

void emit(const Json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!path.empty()) write_file(path, text);
}

// compile

struct CompileArgs {
  std::string model;
  std::string out;
  std::string report;
  bool bnn = false;
  std::uint32_t dmem_words = 0;
};

int cmd_compile(const CompileArgs& a) {
  const auto model = nn::load_model(a.model);
  mips::MipsProgram p;
  std::string kind;
  std::uint32_t data = 0;
  if (const auto* mlp = std::get_if<nn::MlpModel>(&model); mlp && !a.bnn) {
    p = nn::compile_mlp(*mlp, a.dmem_words);
    kind = "mlp";
    data = nn::mlp_data_words(*mlp);
  } else {
    const nn::BnnModel b = mlp ? nn::binarize(*mlp) : std::get<nn::BnnModel>(model);
    p = nn::compile_bnn(b, a.dmem_words);
    kind = "bnn";
    data = nn::bnn_data_words(b);
  }
  const std::string out = a.out.empty() ? fs::path(a.model).replace_extension(".s").string() : a.out;
  write_file(out, mips::disassemble(p));
  std::cerr << kind << ": " << p.instructions.size() << " instructions, " << data << " of " << p.dmem_words
            << " data words -> " << out << "\n";
  emit(Json{{"command", "compile"},
            {"kind", kind},
            {"program", out},
            {"instructions", p.instructions.size()},
            {"dmem_words", p.dmem_words},
            {"data_words", data},
            {"input_words", p.evaluator_input_region.count},
            {"output_words", p.output_region.count}},
       a.report);
  return kExitOk;
}

// run

struct RunArgs {
  std::string program;
  std::string input;
  std::string mode = "full";
  std::string security = "hbc";
  std::string listen;
  std::string connect;
  bool loopback = false;
  bool hiding = false;
  bool timing = false;
  std::string seed;
  std::uint64_t step_limit = 10'000'000;
  std::string report;
};

int cmd_run(const RunArgs& a) {
  const bool garbler = !a.listen.empty();
  const bool evaluator = !a.connect.empty();
  if (int(a.loopback) + int(garbler) + int(evaluator) != 1)
    throw ValidationError("choose exactly one of --loopback, --listen, --connect");
  if ((a.loopback || garbler) && a.program.empty()) throw ValidationError("the garbler needs a program");
  if ((a.loopback || evaluator) && a.input.empty()) throw ValidationError("the evaluator needs --input");

  const Seed seed = parse_seed(a.seed);
  protocol::SessionConfig cfg;
  cfg.mode = protocol::Mode::parse(a.mode);
  cfg.security = protocol::Security::parse(a.security);
  cfg.output_hiding = a.hiding;
  cfg.profile = profile_from_env();
  cfg.step_limit = a.step_limit;
  cfg.networked = !a.loopback;
  cfg.validate();
  protocol::SessionConfig gcfg = cfg, ecfg = cfg;
  gcfg.fresh_seed = derive_seed(seed, "garbler", 0);
  ecfg.fresh_seed = derive_seed(seed, "evaluator", 0);

  std::optional<mips::MipsProgram> program;
  if (!a.program.empty()) program = load_program(a.program);
  std::vector<std::uint32_t> x;
  if (!a.input.empty()) x = read_words(a.input);
  if (program && !a.input.empty() && x.size() != program->evaluator_input_region.count)
    throw ValidationError("input has " + std::to_string(x.size()) + " words, program expects " +
                          std::to_string(program->evaluator_input_region.count));

  Json report{{"command", "run"},
              {"role", a.loopback ? "loopback" : garbler ? "garbler" : "evaluator"},
              {"seed", to_hex(seed)},
              {"mode", cfg.mode.to_string()},
              {"security", cfg.security.to_string()},
              {"output_hiding", cfg.output_hiding},
              {"profile", cfg.profile == ot::Profile::Secure ? "secure" : "test"}};
  const auto start = std::chrono::steady_clock::now();
  protocol::Verdict verdict = protocol::Verdict::Ok;
  try {
    std::optional<protocol::GarblerResult> g;
    std::optional<protocol::EvaluatorResult> e;
    if (a.loopback) {
      auto r = protocol::run_loopback(gcfg, ecfg, *program, x);
      g = std::move(r.garbler);
      e = std::move(r.evaluator);
    } else if (garbler) {
      auto ch = net::tcp_listen(net::parse_address(a.listen).second);
      g = protocol::run_garbler(gcfg, *program, *ch);
    } else {
      const auto [host, port] = net::parse_address(a.connect);
      auto ch = net::tcp_connect(host, port);
      e = protocol::run_evaluator(ecfg, x, *ch);
    }
    const auto& phi = e ? e->phi : g->phi;
    verdict = e ? e->verdict : g->verdict;
    report["verdict"] = std::string(protocol::to_string(verdict));
    const auto flagged = e ? e->flagged_copy : g->flagged_copy;
    report["flagged_copy"] = flagged ? Json(*flagged) : Json(nullptr);
    if (e) {
      report["y"] = e->y;
      report["y_signed"] = signed_words(e->y);
      report["checked_copies"] = e->checked_copies;
    }
    if (g && g->revealed_output) report["revealed_output"] = signed_words(*g->revealed_output);
    report["rounds_formula"] = protocol::rounds_for(cfg.mode, phi.step_count);
    report["stats"] = stats_json(e ? e->stats : g->stats);
    if (a.loopback) report["garbler_stats"] = stats_json(g->stats);
    report["side_info"] = side_info_json(phi);
  } catch (const std::exception& ex) {
    throw RunFailure(ex.what());
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (a.timing) report["elapsed_ms"] = ms;
  std::cerr << "verdict " << protocol::to_string(verdict) << ", T = " << report["side_info"]["step_count"]
            << ", rounds " << report["stats"]["ot_rounds"] << ", " << static_cast<long>(ms) << " ms\n";
  emit(report, a.report);
  return verdict == protocol::Verdict::Ok ? kExitOk : kExitFailure;
}

// account

struct AccountArgs {
  std::string program;
  std::vector<std::string> modes{"full", "stream:1"};
  std::string security = "hbc";
  bool hiding = false;
  std::uint64_t steps = 0;
  std::uint32_t dmem_words = 256;
  std::string report;
};

int cmd_account(const AccountArgs& a) {
  protocol::SessionShape shape;
  if (!a.program.empty()) {
    shape = protocol::shape_of(load_program(a.program));
  } else if (a.steps > 0) {
    shape.steps = a.steps;
    shape.dmem_words = a.dmem_words;
  } else {
    throw ValidationError("account needs a program or --steps");
  }
  Json rows = Json::array();
  std::fprintf(stderr, "%-12s %10s %16s %14s %12s %12s\n", "mode", "rounds", "bytes g->e", "bytes e->g", "peak tables",
               "peak labels");
  for (const auto& m : a.modes) {
    protocol::SessionConfig cfg;
    cfg.mode = protocol::Mode::parse(m);
    cfg.security = protocol::Security::parse(a.security);
    cfg.output_hiding = a.hiding;
    cfg.validate();
    const auto s = protocol::account(cfg, shape);
    std::fprintf(stderr, "%-12s %10llu %16llu %14llu %12llu %12llu\n", cfg.mode.to_string().c_str(),
                 static_cast<unsigned long long>(s.ot_rounds),
                 static_cast<unsigned long long>(s.bytes_garbler_to_evaluator),
                 static_cast<unsigned long long>(s.bytes_evaluator_to_garbler),
                 static_cast<unsigned long long>(s.peak_resident_tables),
                 static_cast<unsigned long long>(s.peak_resident_labels));
    Json row{{"mode", cfg.mode.to_string()}};
    row.update(stats_json(s));
    rows.push_back(row);
  }
  emit(Json{{"command", "account"},
            {"steps", shape.steps},
            {"dmem_words", shape.dmem_words},
            {"input_words", shape.input_words},
            {"output_words", shape.output_words},
            {"security", a.security},
            {"output_hiding", a.hiding},
            {"modes", rows}},
       a.report);
  return kExitOk;
}

// leakage

struct LeakageArgs {
  std::string program;
  std::string target = "unprotected";
  std::uint32_t traces = 10'000;
  double sigma = 1.0;
  std::string out;
  std::string input;
  std::string random_inputs = "int16";
  std::uint32_t samples_per_step = 0;
  std::optional<std::uint64_t> window_start;
  std::uint32_t window_steps = 4;
  std::string seed;
  std::string report;
};

int cmd_leakage(const LeakageArgs& a) {
  const auto program = load_program(a.program);
  const std::uint32_t n_in = program.evaluator_input_region.count;
  leakage::CampaignConfig cfg;
  cfg.target = leakage::parse_target(a.target);
  cfg.traces = a.traces;
  const Seed seed = parse_seed(a.seed);
  cfg.seed = seed;
  const bool garbled = cfg.target != leakage::Target::Unprotected;
  cfg.model = {a.sigma, a.samples_per_step ? a.samples_per_step : (garbled ? 32u : 1u)};
  if (a.random_inputs == "int16")
    cfg.sampler = leakage::int16_inputs(n_in);
  else if (a.random_inputs == "word")
    cfg.sampler = leakage::word_inputs(n_in);
  else
    throw ValidationError("--random-inputs must be 'int16' or 'word'");
  if (!a.input.empty()) {
    cfg.fixed_x = read_words(a.input);
  } else {
    Prg prg(derive_seed(seed, "fixed-input", 0));
    cfg.fixed_x = cfg.sampler(prg);
  }
  if (garbled) {
    auto w = leakage::default_window(program);
    if (a.window_start) w.first_step = *a.window_start;
    w.steps = a.window_steps;
    cfg.window = w;
  }

  leakage::CampaignResult r;
  try {
    r = leakage::run_campaign(program, cfg);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& ex) {
    throw RunFailure(ex.what());
  }
  Json report{{"command", "leakage"},
              {"target", std::string(leakage::to_string(cfg.target))},
              {"seed", to_hex(seed)},
              {"traces_fixed", r.fixed.n_traces},
              {"traces_random", r.random.n_traces},
              {"sigma", a.sigma},
              {"samples_per_step", cfg.model.samples_per_step},
              {"samples", r.fixed.n_samples}};
  if (garbled) report["window"] = Json{{"first_step", r.window.first_step}, {"steps", r.window.steps}};
  report["max_abs_t"] = r.verdict.max_abs_t;
  report["max_index"] = r.verdict.max_index;
  report["offending_samples"] = r.verdict.offending.size();
  report["threshold"] = leakage::kTvlaThreshold;
  report["verdict"] = r.verdict.pass ? "PASS" : "FAIL";
  if (!a.out.empty()) {
    const std::string fixed = a.out + ".fixed.trc", random = a.out + ".random.trc", csv = a.out + ".t.csv";
    leakage::export_traces(r.fixed, fixed);
    leakage::export_traces(r.random, random);
    leakage::write_t_csv(r.series, csv);
    report["files"] = Json{{"fixed", fixed}, {"random", random}, {"t_scores", csv}};
  }
  std::cerr << leakage::to_string(cfg.target) << ": " << (r.verdict.pass ? "PASS" : "FAIL") << ", max |t| = "
            << r.verdict.max_abs_t << " at sample " << r.verdict.max_index << "\n";
  emit(report, a.report);
  return kExitOk;
}

// netlist

struct NetlistArgs {
  std::uint32_t dmem_words = 256;
  std::string out;
};

int cmd_netlist(const NetlistArgs& a) {
  const auto& net = protocol::step_netlist(a.dmem_words);
  const auto c = circuit::count_gates(net);
  if (!a.out.empty()) circuit::save_netlist(net, a.out);
  std::cerr << "step netlist W=" << a.dmem_words << ": " << c.total << " gates, " << c.nonfree << " nonfree\n";
  emit(Json{{"command", "netlist"},
            {"dmem_words", a.dmem_words},
            {"inputs", net.n_inputs()},
            {"outputs", net.n_outputs()},
            {"gates", c.total},
            {"nonfree_gates", c.nonfree}},
       "");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious neural-network inference over a garbled MIPS step circuit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hwgn2 wire version " + std::to_string(protocol::kWireVersion));

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Compile a model JSON file to a program");
  compile->add_option("model", ca.model, "Model file")->required()->check(CLI::ExistingFile);
  compile->add_flag("--bnn", ca.bnn, "Binarize an MLP before compiling");
  compile->add_option("-o,--out", ca.out, "Program file (default: model path with .s)");
  compile->add_option("--dmem-words", ca.dmem_words, "Data memory size (default: smallest that fits)");
  compile->add_option("--report", ca.report, "Also write the JSON report here");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a garbled inference session");
  run->add_option("program", ra.program, "Program file (garbler side)")->check(CLI::ExistingFile);
  run->add_option("--input", ra.input, "Evaluator input words")->check(CLI::ExistingFile);
  run->add_option("--mode", ra.mode, "full | stream:K")->capture_default_str();
  run->add_option("--security", ra.security, "hbc | malicious:S")->capture_default_str();
  run->add_option("--listen", ra.listen, "Garbler: listen on [host:]port");
  run->add_option("--connect", ra.connect, "Evaluator: connect to host:port");
  run->add_flag("--loopback", ra.loopback, "Both roles in this process");
  run->add_flag("--hiding", ra.hiding, "Mask the output so only the garbler can read it");
  run->add_flag("--timing", ra.timing, "Add elapsed time to the report");
  run->add_option("--seed", ra.seed, "64 hex digits or an integer (default: OS entropy)");
  run->add_option("--step-limit", ra.step_limit)->capture_default_str();
  run->add_option("--report", ra.report, "Also write the JSON report here");

  AccountArgs aa;
  auto* account = app.add_subcommand("account", "Predict rounds, bytes and memory without running");
  account->add_option("program", aa.program, "Program file")->check(CLI::ExistingFile);
  account->add_option("--mode", aa.modes, "full | stream:K (repeatable)");
  account->add_option("--security", aa.security)->capture_default_str();
  account->add_flag("--hiding", aa.hiding);
  account->add_option("--steps", aa.steps, "Step count, when no program is given");
  account->add_option("--dmem-words", aa.dmem_words, "Data memory size, when no program is given")
      ->capture_default_str();
  account->add_option("--report", aa.report, "Also write the JSON report here");

  LeakageArgs la;
  auto* leak = app.add_subcommand("leakage", "Fixed-vs-random TVLA campaign on simulated traces");
  leak->add_option("program", la.program, "Program file")->required()->check(CLI::ExistingFile);
  leak->add_option("--target", la.target, "unprotected | garbled | garbled-reused-seed")->capture_default_str();
  leak->add_option("--traces", la.traces, "Total traces, split between the populations")->capture_default_str();
  leak->add_option("--sigma", la.sigma, "Gaussian noise std")->capture_default_str();
  leak->add_option("--out", la.out, "Prefix for PREFIX.fixed.trc, PREFIX.random.trc, PREFIX.t.csv");
  leak->add_option("--input", la.input, "Fixed-population input words (default: drawn from the seed)")
      ->check(CLI::ExistingFile);
  leak->add_option("--random-inputs", la.random_inputs, "int16 | word")->capture_default_str();
  leak->add_option("--samples-per-step", la.samples_per_step, "Default: 1 unprotected, 32 garbled");
  leak->add_option("--window-start", la.window_start, "Garbled: first step (default: first input load)");
  leak->add_option("--window-steps", la.window_steps, "Garbled: steps per trace")->capture_default_str();
  leak->add_option("--seed", la.seed, "64 hex digits or an integer (default: OS entropy)");
  leak->add_option("--report", la.report, "Also write the JSON report here");

  NetlistArgs na;
  auto* netlist = app.add_subcommand("netlist", "Write the step netlist for a data memory size");
  netlist->add_option("--dmem-words", na.dmem_words)->capture_default_str();
  netlist->add_option("-o,--out", na.out, "Netlist file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*compile) return cmd_compile(ca);
    if (*run) return cmd_run(ra);
    if (*account) return cmd_account(aa);
    if (*leak) return cmd_leakage(la);
    if (*netlist) return cmd_netlist(na);
  } catch (const RunFailure& e) {
    std::cerr << "hwgn2: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "hwgn2: error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
