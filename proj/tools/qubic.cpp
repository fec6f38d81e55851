// Copyright 2026 The qubic-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qubic: command-line front end for the compiler, emulator and QCVV harness.
//
// Exit codes: 0 ok, 1 usage, 2 config error, 3 compile error,
// 4 transport error, 5 verification failure.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "qubic/chipcfg.hpp"
#include "qubic/compiler.hpp"
#include "qubic/device.hpp"
#include "qubic/envgen.hpp"
#include "qubic/qcvv.hpp"

namespace fs = std::filesystem;
using namespace qubic;

namespace {

enum Exit { ok = 0, usage = 1, config = 2, compile_error = 3, transport = 4, verification = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerifyFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};

struct Common {
  std::string chip, gates, hardware;
  std::string out = ".";
  std::optional<std::uint64_t> seed;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("QUBIC_FORGE_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError(std::string("QUBIC_FORGE_SEED is not an unsigned integer: ") + env);
      }
    }
    return 1;
  }
};

struct Configs {
  cfg::ChipConfig chip;
  cfg::GatePulseSpec gates;
  cfg::HardwareConfig hw;
};

Configs load_configs(const Common& c) {
  if (c.chip.empty() || c.gates.empty() || c.hardware.empty())
    throw UsageError("--chip, --gates and --hardware are required");
  Configs k;
  k.chip = cfg::load_chip_config_file(c.chip);
  k.gates = cfg::load_gate_spec_file(c.gates, k.chip);
  k.hw = cfg::load_hardware_config_file(c.hardware);
  return k;
}

fs::path output_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return fs::path(c.out) / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + p.string());
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

compiler::Mode parse_mode(const std::string& s) {
  auto m = compiler::mode_from_string(s);
  if (!m) throw UsageError("unknown compiler mode '" + s + "'");
  return *m;
}

/// Program from --program, or compiled from --circuit.
compiler::CompiledProgram obtain_program(const std::string& program, const std::string& circuit,
                                         const std::string& mode, const Configs& k) {
  if (!program.empty()) return compiler::deserialize(read_bytes(program));
  if (circuit.empty()) throw UsageError("give --program or --circuit");
  return compiler::compile(compiler::load_circuit_file(circuit), k.chip, k.gates, k.hw, parse_mode(mode));
}

std::pair<std::string, std::uint16_t> parse_server(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw UsageError("--server expects HOST:PORT");
  try {
    const int port = std::stoi(s.substr(colon + 1));
    if (port <= 0 || port > 65535) throw UsageError("port out of range in --server");
    return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
  } catch (const std::invalid_argument&) {
    throw UsageError("--server expects HOST:PORT");
  }
}

std::string acc_csv(const dsp::AccResult& acc) {
  std::ostringstream os;
  os << "element,index,i,q\n";
  for (std::size_t e = 0; e < acc.elements.size(); ++e)
    for (std::size_t n = 0; n < acc.elements[e].size(); ++n)
      os << e << ',' << n << ',' << acc.elements[e][n].i << ',' << acc.elements[e][n].q << '\n';
  return os.str();
}

int resolve_qubit(const qcvv::MockModel& m, const std::string& q) {
  const int k = m.index_of(q);
  if (k >= 0) return k;
  try {
    std::size_t used = 0;
    const int i = std::stoi(q, &used);
    if (used == q.size() && i >= 0 && i < static_cast<int>(m.qubits.size())) return i;
  } catch (const std::exception&) {
  }
  throw UsageError("qubit '" + q + "' is not in the mock model");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QubiC pulse compiler, gateware emulator and QCVV harness.\n"
               "Exit codes: 0 ok, 1 usage, 2 config error, 3 compile error, 4 transport error,\n"
               "5 verification failure. QUBIC_FORGE_SEED sets the seed when --seed is absent."};
  app.require_subcommand(1);
  Common c;

  auto add_configs = [&](CLI::App* s) {
    s->add_option("--chip", c.chip, "Chip configuration JSON")->check(CLI::ExistingFile);
    s->add_option("--gates", c.gates, "Gate pulse specification JSON")->check(CLI::ExistingFile);
    s->add_option("--hardware", c.hardware, "Hardware map JSON")->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* s) { s->add_option("-o,--out", c.out, "Output directory")->capture_default_str(); };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", c.seed, "Random seed (else QUBIC_FORGE_SEED, else 1)"); };

  std::string circuit, program, mode = "optm", name = "program";
  bool no_dedup = false;

  auto* compile = app.add_subcommand("compile", "Compile a circuit to a program container and TP dump");
  add_configs(compile);
  add_out(compile);
  compile->add_option("--circuit", circuit, "Circuit JSON")->required()->check(CLI::ExistingFile);
  compile->add_option("--mode", mode, "optm or runc")->capture_default_str();
  compile->add_option("--name", name, "Output file stem")->capture_default_str();
  compile->add_flag("--no-dedup", no_dedup, "Store every envelope separately");

  auto* simulate = app.add_subcommand("simulate", "Play a program open loop and write DAC waveforms as CSV");
  add_configs(simulate);
  add_out(simulate);
  simulate->add_option("--program", program, "Compiled program container")->check(CLI::ExistingFile);
  simulate->add_option("--circuit", circuit, "Circuit JSON, compiled in memory")->check(CLI::ExistingFile);
  simulate->add_option("--mode", mode, "optm or runc")->capture_default_str();

  std::string host = "127.0.0.1";
  std::uint16_t port = 9750;
  auto* serve = app.add_subcommand("serve", "Run the UDP device emulator until interrupted");
  serve->add_option("--hardware", c.hardware, "Hardware map JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "UDP port, 0 for any")->capture_default_str();

  std::string server = "127.0.0.1:9750";
  std::uint64_t shots = 1;
  int retries = 3, timeout_ms = 100;
  bool verify = false;
  auto* run = app.add_subcommand("run", "Upload and execute a program on a device server");
  add_configs(run);
  add_out(run);
  run->add_option("--program", program, "Compiled program container")->check(CLI::ExistingFile);
  run->add_option("--circuit", circuit, "Circuit JSON, compiled in memory")->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "optm or runc")->capture_default_str();
  run->add_option("--server", server, "Device address HOST:PORT")->capture_default_str();
  run->add_option("--shots", shots, "Shots")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--retries", retries, "Retransmissions per request")->capture_default_str()->check(CLI::NonNegativeNumber);
  run->add_option("--timeout-ms", timeout_ms, "Response timeout per attempt")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_flag("--verify", verify, "Compare the accumulators against the local simulator");

  std::string model_path, qubit = "Q0", qubit2;
  std::vector<int> lengths{2, 4, 8, 16, 32, 64, 128, 256};
  int sequences = 20, rb_shots = 500;
  std::optional<double> fidelity;
  auto* rb = app.add_subcommand("rb", "Randomized benchmarking on the mock model");
  add_out(rb);
  add_seed(rb);
  rb->add_option("--model", model_path, "Mock model JSON")->required()->check(CLI::ExistingFile);
  rb->add_option("--qubit", qubit, "Qubit name or index")->capture_default_str();
  rb->add_option("--qubit2", qubit2, "Second qubit for simultaneous two-qubit RB");
  rb->add_option("--lengths", lengths, "Sequence lengths")->delimiter(',')->capture_default_str();
  rb->add_option("--sequences", sequences, "Random sequences per length")->capture_default_str()->check(CLI::PositiveNumber);
  rb->add_option("--shots", rb_shots, "Shots per sequence")->capture_default_str()->check(CLI::NonNegativeNumber);
  rb->add_option("--fidelity", fidelity, "Set p_dep for this average Clifford fidelity")->check(CLI::Range(0.5, 1.0));

  int n_circuits = 100, n_qubits = 3, depth = 5, variants = 20, rc_shots = 2000;
  bool no_hardware = false;
  auto* rc = app.add_subcommand("rc", "Randomized-compiling TVD harness on the mock model");
  add_out(rc);
  add_seed(rc);
  rc->add_option("--model", model_path, "Mock model JSON")->required()->check(CLI::ExistingFile);
  rc->add_option("--circuits", n_circuits, "Bare circuits")->capture_default_str()->check(CLI::PositiveNumber);
  rc->add_option("--qubits", n_qubits, "Qubits per circuit")->capture_default_str()->check(CLI::Range(2, 4));
  rc->add_option("--depth", depth, "Hard cycles per circuit")->capture_default_str()->check(CLI::NonNegativeNumber);
  rc->add_option("--variants", variants, "Twirled variants per circuit")->capture_default_str()->check(CLI::PositiveNumber);
  rc->add_option("--shots", rc_shots, "Shots per circuit, shared by its variants")->capture_default_str()->check(CLI::PositiveNumber);
  rc->add_flag("--no-hardware", no_hardware, "Skip compiling and playing variants on the emulator");

  std::string gate;
  auto* dump_env = app.add_subcommand("dump-envelope", "Print the scaled envelope samples of a gate as CSV");
  add_configs(dump_env);
  dump_env->add_option("--gate", gate, "Gate key, e.g. Q6.Y180")->required();

  auto* dump_tp = app.add_subcommand("dump-tp", "Print the time-pulse list of a circuit");
  add_configs(dump_tp);
  dump_tp->add_option("--circuit", circuit, "Circuit JSON")->required()->check(CLI::ExistingFile);
  dump_tp->add_option("--mode", mode, "optm or runc")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  try {
    if (*compile) {
      const auto k = load_configs(c);
      const compiler::Compiler comp(k.chip, k.gates, k.hw, parse_mode(mode));
      const auto circ = compiler::load_circuit_file(circuit);
      const auto prog = comp.compile(circ, !no_dedup);
      const auto bin = output_path(c, name + ".qbcp"), tp = output_path(c, name + ".tp.txt");
      write_bytes(bin, compiler::serialize(prog));
      write_text(tp, compiler::format_tp(comp.time_pulses(circ)));
      std::cout << "wrote " << bin.string() << " (" << prog.commands.size() << " commands, "
                << prog.envelope_word_count() << " envelope words) and " << tp.string() << "\n";
    } else if (*simulate) {
      const auto k = load_configs(c);
      const auto prog = obtain_program(program, circuit, mode, k);
      const auto out = output_path(c, "waveforms.csv");
      write_text(out, compiler::waveforms_to_csv(compiler::simulate_program(prog, k.hw)));
      std::cout << "wrote " << out.string() << "\n";
    } else if (*serve) {
      const auto hw = cfg::load_hardware_config_file(c.hardware);
      device::Server srv(hw, host, port);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      std::cout << "listening on " << host << ":" << srv.port() << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      srv.stop();
      std::cout << "handled " << srv.handled() << " datagrams, dropped " << srv.dropped() << "\n";
    } else if (*run) {
      const auto k = load_configs(c);
      const auto prog = obtain_program(program, circuit, mode, k);
      const auto [h, p] = parse_server(server);
      device::RetryPolicy policy;
      policy.retries = retries;
      policy.timeout = std::chrono::milliseconds(timeout_ms);
      device::Client client(std::make_unique<device::UdpTransport>(h, p), k.hw, policy);
      device::RunSetup setup;
      setup.shots = shots;
      client.clear_acc();
      client.upload(prog);
      const auto result = client.run(setup);
      write_text(output_path(c, "acc.csv"), acc_csv(result.acc));
      nlohmann::json st{{"shots_completed", result.status.shots_completed},
                        {"saturations", result.status.saturations},
                        {"faults", result.status.faults},
                        {"acc_full", result.status.acc_full},
                        {"retransmissions", client.retransmissions()}};
      write_text(output_path(c, "status.json"), st.dump(2));
      std::cout << "ran " << result.status.shots_completed << " shots, "
                << result.acc.total() << " accumulator entries\n";
      if (verify) {
        const auto local = device::run_locally(dsp::SimConfig::from_hardware(k.hw),
                                               compiler::to_machine_image(prog, k.hw), setup);
        if (local.acc != result.acc) throw VerifyFailed("device accumulators differ from the local simulation");
        std::cout << "verified against the local simulation\n";
      }
    } else if (*rb) {
      auto model = qcvv::load_mock_model_file(model_path);
      const int a = resolve_qubit(model, qubit);
      const int b = qubit2.empty() ? -1 : resolve_qubit(model, qubit2);
      if (fidelity) {
        const double pd = qcvv::p_dep_for_fidelity(*fidelity);
        model.qubits[a].p_dep = pd;
        if (b >= 0) model.qubits[b].p_dep = pd;
      }
      qcvv::RBSettings s;
      s.lengths = lengths;
      s.sequences = sequences;
      s.shots = rb_shots;
      s.seed = c.resolved_seed();
      const auto r = b >= 0 ? qcvv::rb_two_qubit(model, a, b, s) : qcvv::rb_experiment(model, a, s);
      write_text(output_path(c, "rb.json"), qcvv::to_json(r));
      write_text(output_path(c, "rb.csv"), qcvv::to_csv(r));
      std::cout << "p = " << r.fit.p << " +- " << r.fit.sigma_p() << ", r = " << r.error_per_clifford()
                << ", F_avg = " << r.average_fidelity() << "\n";
    } else if (*rc) {
      const auto model = qcvv::load_mock_model_file(model_path);
      qcvv::RCSettings s;
      s.variants = variants;
      s.shots = rc_shots;
      s.seed = c.resolved_seed();
      s.hardware_path = !no_hardware;
      std::mt19937_64 rng(qcvv::derive_seed(s.seed, 0xC1C));
      std::vector<qcvv::LayeredCircuit> bare;
      for (int i = 0; i < n_circuits; ++i) bare.push_back(qcvv::random_layered_circuit(n_qubits, depth, rng));
      const auto r = qcvv::rc_harness(bare, model, s);
      write_text(output_path(c, "rc.json"), qcvv::to_json(r));
      write_text(output_path(c, "tvd.csv"), qcvv::tvd_csv(r));
      write_text(output_path(c, "timing.csv"), qcvv::timing_csv(r));
      std::cout << "bare TVD " << r.bare_mean << " +- " << r.bare_std << ", RC TVD " << r.rc_mean << " +- "
                << r.rc_std << ", one-sided p = " << r.p_value << "\n";
    } else if (*dump_env) {
      const auto k = load_configs(c);
      const auto it = k.gates.gates.find(gate);
      if (it == k.gates.gates.end()) throw cfg::ConfigError(cfg::ConfigError::Kind::unresolved, gate, "no such gate");
      std::cout << "pulse,dest,sample,i,q\n";
      for (std::size_t n = 0; n < it->second.size(); ++n) {
        const auto& p = it->second[n];
        const auto env = env::scaled(env::generate(p.env, p.twidth, k.hw.sample_period()), p.amp);
        for (std::size_t s = 0; s < env.samples.size(); ++s)
          std::cout << n << ',' << p.dest << ',' << s << ',' << env.samples[s].real() << ','
                    << env.samples[s].imag() << '\n';
      }
    } else if (*dump_tp) {
      const auto k = load_configs(c);
      const compiler::Compiler comp(k.chip, k.gates, k.hw, parse_mode(mode));
      std::cout << compiler::format_tp(comp.time_pulses(compiler::load_circuit_file(circuit)));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const cfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  } catch (const compiler::CompileError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return compile_error;
  } catch (const env::EnvelopeError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return compile_error;
  } catch (const cmd::CodecError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return compile_error;
  } catch (const device::TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return transport;
  } catch (const device::DeviceError& e) {
    std::cerr << "device error: " << e.what() << "\n";
    return transport;
  } catch (const qcvv::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return verification;
  } catch (const VerifyFailed& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return verification;
  } catch (const qcvv::QcvvError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config;
  }
  return ok;
}
