// Copyright 2026 The vprtempo-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line surface for the vprtempo library: preprocess, synth, train,
// query, eval, bench. Exit codes: 0 success, 2 config/usage, 3 dataset,
// 4 model, 5 file I/O, 6 invalid input/state, 1 unexpected failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vprtempo/vprtempo.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ConfigArgs {
  std::string configFile;
  std::vector<std::string> sets;

  vprtempo::RunConfig materialize() const {
    vprtempo::RunConfig cfg;
    if (!configFile.empty()) cfg = vprtempo::RunConfig::fromFile(configFile);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw vprtempo::ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(vprtempo::detail::trim(kv.substr(0, eq)),
              vprtempo::detail::trim(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
  }
};

void addConfigFlags(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.configFile, "Config file (key = value lines)");
  cmd->add_option("--set", args.sets, "Override a config key (key=value, repeatable)");
}

int resolveWorkers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("VPRTEMPO_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // auto
}

std::set<std::string> toSet(const std::vector<std::string>& v) {
  return std::set<std::string>(v.begin(), v.end());
}

vprtempo::EncodedTraversals<float> encodeRole(const vprtempo::TraversalDataset& ds,
                                              const vprtempo::RunConfig& cfg,
                                              vprtempo::VariantRole role) {
  return vprtempo::encodeDataset<float>(ds, cfg.pre, role, resolveWorkers(cfg.workers));
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  ConfigArgs config;
  std::string imagePath;
  std::string outPath;
  std::string format = "bin";
};

int runPreprocess(const PreprocessArgs& args) {
  const auto cfg = args.config.materialize();
  const vprtempo::Image img = vprtempo::loadImage(args.imagePath);
  const auto amps = vprtempo::preprocess<float>(img, cfg.pre);
  if (args.format == "bin") {
    std::ofstream out(args.outPath, std::ios::binary);
    if (!out) throw vprtempo::IoError("cannot write " + args.outPath);
    out.write(reinterpret_cast<const char*>(amps.data()),
              static_cast<std::streamsize>(sizeof(float) * amps.size()));
  } else if (args.format == "csv") {
    std::ofstream out(args.outPath);
    if (!out) throw vprtempo::IoError("cannot write " + args.outPath);
    out << "index,amplitude\n";
    for (Eigen::Index i = 0; i < amps.size(); ++i) out << i << ',' << amps[i] << '\n';
  } else {
    throw vprtempo::ConfigError("--format must be bin or csv");
  }
  std::cout << "wrote " << amps.size() << " amplitudes (" << args.format << ") to "
            << args.outPath << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string outDir;
  vprtempo::SynthOptions opts;
};

int runSynth(const SynthArgs& args) {
  vprtempo::synthesizeDataset(args.outDir, args.opts);
  std::cout << "synthesized " << args.opts.places << " places x "
            << (args.opts.trainVariants + args.opts.queryVariants) << " variants ("
            << args.opts.trainVariants << " train, " << args.opts.queryVariants
            << " query) under " << args.outDir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  ConfigArgs config;
  std::string datasetRoot;
  std::string outPath;
  std::vector<std::string> queryVariants;  // role override for manifest-less roots
};

int runTrain(const TrainArgs& args) {
  const auto cfg = args.config.materialize();
  std::cout << "effective config:\n" << cfg.canonicalText();

  const auto ds = vprtempo::loadDatasetRoot(args.datasetRoot, cfg.stride,
                                            cfg.limit > 0 ? cfg.limit : -1,
                                            toSet(args.queryVariants));
  const auto trainIdx = ds.variantIndices(vprtempo::VariantRole::Train);
  std::cout << "dataset: " << ds.places << " places, " << trainIdx.size()
            << " train variant(s)\n";

  const auto prepStart = Clock::now();
  const auto encoded = encodeRole(ds, cfg, vprtempo::VariantRole::Train);
  const double prepSeconds = secondsSince(prepStart);

  vprtempo::TrainOptions opts;
  opts.placesPerModule = cfg.placesPerModule;
  opts.featureSize = cfg.featureSize;
  opts.seed = cfg.seed;
  opts.workers = resolveWorkers(cfg.workers);
  opts.shuffle = cfg.shuffle;

  const auto trainStart = Clock::now();
  const auto ens = vprtempo::trainEnsemble(encoded, cfg.hyper, opts);
  const double trainSeconds = secondsSince(trainStart);

  vprtempo::saveModel(ens, cfg, args.outPath);
  std::cout << "modules: " << ens.moduleCount() << " (" << cfg.placesPerModule
            << " places per module)\n"
            << "feature layer: " << ens.featureSize() << " neurons\n"
            << "image decode+preprocess: " << prepSeconds << " s\n"
            << "training: " << trainSeconds / 60.0 << " min ("
            << static_cast<double>(ds.places) / trainSeconds << " places/s)\n"
            << "model written to " << args.outPath << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string modelPath;
  std::string imagePath;
  std::string imageDir;
  bool verbose = false;
};

int runQuery(const QueryArgs& args) {
  const auto model = vprtempo::loadModel(args.modelPath);
  const vprtempo::BatchedEnsemble<float> batched(model.ensemble);

  std::vector<std::string> paths;
  if (!args.imagePath.empty()) paths.push_back(args.imagePath);
  if (!args.imageDir.empty()) {
    if (!fs::is_directory(args.imageDir))
      throw vprtempo::IoError("not a directory: " + args.imageDir);
    for (const auto& entry : fs::directory_iterator(args.imageDir))
      if (entry.is_regular_file() && vprtempo::detail::hasImageExtension(entry.path()))
        paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty())
    throw vprtempo::InvalidInputError("query: need --image or --dir with images");

  double querySeconds = 0.0;
  for (const auto& path : paths) {
    const auto amps = vprtempo::preprocess<float>(vprtempo::loadImage(path), model.config.pre);
    const auto t0 = Clock::now();
    const auto res = batched.query(amps);
    querySeconds += secondsSince(t0);
    std::cout << path << "\tplace " << res.globalPlace << "\tamplitude "
              << res.amplitude << "\n";
    if (args.verbose)
      for (const auto& pm : res.perModule)
        std::cout << "  module " << pm.module << ": local neuron " << pm.localNeuron
                  << " amplitude " << pm.amplitude << "\n";
  }
  if (paths.size() > 1)
    std::cout << "aggregate: " << paths.size() << " queries at "
              << static_cast<double>(paths.size()) / querySeconds << " Hz (match stage)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  ConfigArgs config;
  std::string modelPath;
  std::string datasetRoot;
  std::string reportDir;
  std::vector<std::string> queryVariants;
  std::string baseline;  // "sad" enables the baseline comparison
};

int runEval(const EvalArgs& args) {
  const auto model = vprtempo::loadModel(args.modelPath);
  vprtempo::RunConfig cfg = model.config;
  for (const auto& kv : args.config.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw vprtempo::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(vprtempo::detail::trim(kv.substr(0, eq)),
            vprtempo::detail::trim(kv.substr(eq + 1)));
  }
  cfg.validate();

  const auto ds = vprtempo::loadDatasetRoot(args.datasetRoot, cfg.stride,
                                            cfg.limit > 0 ? cfg.limit : -1,
                                            toSet(args.queryVariants));
  if (ds.places != model.ensemble.totalPlaces())
    throw vprtempo::InvalidInputError(
        "eval: dataset has " + std::to_string(ds.places) + " places but the model was " +
        "trained on " + std::to_string(model.ensemble.totalPlaces()));

  const auto queries = encodeRole(ds, cfg, vprtempo::VariantRole::Query);
  const int rows = queries.placeCount * queries.variantCount;
  const auto gt = vprtempo::groundTruthCyclic(rows, ds.places);

  const vprtempo::BatchedEnsemble<float> batched(model.ensemble);
  vprtempo::MatrixX<float> sim(rows, ds.places);
  const auto queryStart = Clock::now();
  for (int v = 0; v < queries.variantCount; ++v)
    for (int p = 0; p < queries.placeCount; ++p) {
      const auto res = batched.query(queries.at(p, v));
      sim.row(v * queries.placeCount + p) = res.amplitudes.transpose();
    }
  const double querySeconds = secondsSince(queryStart);

  vprtempo::EvalReport report;
  report.snn = vprtempo::evaluateMethod(sim, gt);
  report.places = ds.places;
  report.queries = rows;
  report.queryHz = static_cast<double>(rows) / querySeconds;

  fs::create_directories(args.reportDir);
  const fs::path dir(args.reportDir);
  vprtempo::writeMatchesCsv(report.snn.matches, (dir / "matches.csv").string());
  vprtempo::writePrCurveCsv(report.snn.prCurve, (dir / "pr_curve.csv").string());
  vprtempo::writeRecallCsv(report.snn.recallAtN, (dir / "recall_at_n.csv").string());
  vprtempo::writeSimilarityBinary(sim, (dir / "similarity.f32").string());

  std::cout << "vprtempo: P@100R = " << report.snn.pAt100R << "% over " << rows
            << " queries (" << report.queryHz << " Hz match stage)\n";

  if (args.baseline == "sad") {
    const auto trainIdx = ds.variantIndices(vprtempo::VariantRole::Train);
    const auto queryIdx = ds.variantIndices(vprtempo::VariantRole::Query);
    std::vector<vprtempo::Image> refs, queryImgs;
    for (int p = 0; p < ds.places; ++p)
      refs.push_back(vprtempo::preprocessForSad(
          vprtempo::loadImage(ds.files[trainIdx[0]][p]), cfg.pre, cfg.sadFullPipeline));
    for (int v : queryIdx)
      for (int p = 0; p < ds.places; ++p)
        queryImgs.push_back(vprtempo::preprocessForSad(
            vprtempo::loadImage(ds.files[v][p]), cfg.pre, cfg.sadFullPipeline));
    const auto sadSim = vprtempo::sadBaseline<float>(refs, queryImgs);
    report.hasSad = true;
    report.sad = vprtempo::evaluateMethod(sadSim, gt);
    vprtempo::writeMatchesCsv(report.sad.matches, (dir / "sad_matches.csv").string());
    vprtempo::writePrCurveCsv(report.sad.prCurve, (dir / "sad_pr_curve.csv").string());
    vprtempo::writeRecallCsv(report.sad.recallAtN, (dir / "sad_recall_at_n.csv").string());
    vprtempo::writeSimilarityBinary(sadSim, (dir / "sad_similarity.f32").string());
    std::cout << "sad baseline: P@100R = " << report.sad.pAt100R << "%\n";
  } else if (!args.baseline.empty()) {
    throw vprtempo::ConfigError("--baseline supports only 'sad'");
  }

  std::ofstream out(dir / "report.json");
  out << vprtempo::toJson(report).dump(2) << "\n";
  if (!out) throw vprtempo::IoError("cannot write report.json");
  std::cout << "report written to " << args.reportDir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  ConfigArgs config;
  std::vector<int> sizes;
  std::string outCsv;
  std::string workDir;
};

int runBench(const BenchArgs& args) {
  auto cfg = args.config.materialize();
  if (args.sizes.empty()) throw vprtempo::ConfigError("bench: --sizes is required");
  for (std::size_t i = 1; i < args.sizes.size(); ++i)
    if (args.sizes[i] <= args.sizes[i - 1])
      throw vprtempo::ConfigError("bench: sizes must be strictly ascending");

  const fs::path work = args.workDir.empty()
                            ? fs::temp_directory_path() / "vprtempo_bench"
                            : fs::path(args.workDir);
  fs::create_directories(work);

  std::ostringstream csv;
  csv << "places,train_seconds,train_ratio,query_hz,mean_query_ms,latency_ratio\n";
  std::cout << "places  train_s  ratio   query_hz  ms/query  ratio\n";

  double prevTrain = 0.0;
  double prevLatency = 0.0;
  for (std::size_t i = 0; i < args.sizes.size(); ++i) {
    const int n = args.sizes[i];
    const fs::path dsDir = work / ("places_" + std::to_string(n));
    if (!fs::exists(dsDir / "manifest.json")) {
      vprtempo::SynthOptions synth;
      synth.places = n;
      synth.trainVariants = 2;
      synth.queryVariants = 0;
      synth.seed = cfg.seed;
      vprtempo::synthesizeDataset(dsDir.string(), synth);
    }
    const auto ds = vprtempo::loadDatasetRoot(dsDir.string());
    const auto encoded = encodeRole(ds, cfg, vprtempo::VariantRole::Train);

    vprtempo::TrainOptions opts;
    opts.placesPerModule = cfg.placesPerModule;
    opts.featureSize = cfg.featureSize;
    opts.seed = cfg.seed;
    opts.workers = resolveWorkers(cfg.workers);
    opts.shuffle = cfg.shuffle;
    const auto trainStart = Clock::now();
    const auto ens = vprtempo::trainEnsemble(encoded, cfg.hyper, opts);
    const double trainSeconds = secondsSince(trainStart);

    const vprtempo::BatchedEnsemble<float> batched(ens);
    const auto& probe = encoded.at(0, 0);
    for (int k = 0; k < 50; ++k) batched.query(probe);  // warmup
    const int reps = 1000;
    const auto queryStart = Clock::now();
    for (int k = 0; k < reps; ++k) batched.query(probe);
    const double querySeconds = secondsSince(queryStart);
    const double hz = reps / querySeconds;
    const double latencyMs = 1000.0 * querySeconds / reps;

    const double trainRatio = prevTrain > 0.0 ? trainSeconds / prevTrain : 0.0;
    const double latencyRatio = prevLatency > 0.0 ? latencyMs / prevLatency : 0.0;
    prevTrain = trainSeconds;
    prevLatency = latencyMs;

    csv << n << ',' << trainSeconds << ',' << trainRatio << ',' << hz << ','
        << latencyMs << ',' << latencyRatio << '\n';
    std::printf("%6d  %7.2f  %5.2f  %9.1f  %8.3f  %5.2f\n", n, trainSeconds, trainRatio,
                hz, latencyMs, latencyRatio);
  }

  if (!args.outCsv.empty()) {
    std::ofstream out(args.outCsv);
    if (!out) throw vprtempo::IoError("cannot write " + args.outCsv);
    out << csv.str();
    std::cout << "scaling table written to " << args.outCsv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vprtempo: temporally coded spiking networks for visual place recognition"};
  app.require_subcommand(1);

  PreprocessArgs preprocessArgs;
  auto* cmdPre = app.add_subcommand("preprocess", "Preprocess one image into spike amplitudes");
  cmdPre->add_option("--image", preprocessArgs.imagePath, "Input PNG/JPEG")->required();
  cmdPre->add_option("--out", preprocessArgs.outPath, "Output file")->required();
  cmdPre->add_option("--format", preprocessArgs.format, "bin (f32 LE) or csv");
  addConfigFlags(cmdPre, preprocessArgs.config);

  SynthArgs synthArgs;
  auto* cmdSynth = app.add_subcommand("synth", "Synthesize a traversal dataset");
  cmdSynth->add_option("--out", synthArgs.outDir, "Output dataset root")->required();
  cmdSynth->add_option("--places", synthArgs.opts.places, "Number of places")->required();
  cmdSynth->add_option("--variants", synthArgs.opts.trainVariants, "Train variants");
  cmdSynth->add_option("--noise-sigma", synthArgs.opts.noiseSigma,
                       "Pixel noise for train variants past the base");
  cmdSynth->add_option("--query-variants", synthArgs.opts.queryVariants, "Query variants");
  cmdSynth->add_option("--query-noise-sigma", synthArgs.opts.querySigma,
                       "Pixel noise for query variants");
  cmdSynth->add_option("--width", synthArgs.opts.width, "Image width");
  cmdSynth->add_option("--height", synthArgs.opts.height, "Image height");
  cmdSynth->add_option("--seed", synthArgs.opts.seed, "Random seed");

  TrainArgs trainArgs;
  auto* cmdTrain = app.add_subcommand("train", "Train an ensemble on a dataset");
  cmdTrain->add_option("--dataset", trainArgs.datasetRoot, "Dataset root")->required();
  cmdTrain->add_option("--out", trainArgs.outPath, "Output model file")->required();
  cmdTrain->add_option("--query-variant", trainArgs.queryVariants,
                       "Treat this variant as query-role (repeatable)");
  addConfigFlags(cmdTrain, trainArgs.config);

  QueryArgs queryArgs;
  auto* cmdQuery = app.add_subcommand("query", "Match images against a trained model");
  cmdQuery->add_option("--model", queryArgs.modelPath, "Model file")->required();
  cmdQuery->add_option("--image", queryArgs.imagePath, "Single query image");
  cmdQuery->add_option("--dir", queryArgs.imageDir, "Directory of query images");
  cmdQuery->add_flag("--verbose", queryArgs.verbose, "Per-module breakdown");

  EvalArgs evalArgs;
  auto* cmdEval = app.add_subcommand("eval", "Evaluate matching accuracy on a dataset");
  cmdEval->add_option("--model", evalArgs.modelPath, "Model file")->required();
  cmdEval->add_option("--dataset", evalArgs.datasetRoot, "Dataset root")->required();
  cmdEval->add_option("--report", evalArgs.reportDir, "Report output directory")->required();
  cmdEval->add_option("--query-variant", evalArgs.queryVariants,
                      "Treat this variant as query-role (repeatable)");
  cmdEval->add_option("--baseline", evalArgs.baseline, "Also evaluate a baseline (sad)");
  addConfigFlags(cmdEval, evalArgs.config);

  BenchArgs benchArgs;
  auto* cmdBench = app.add_subcommand("bench", "Training/query scaling benchmark");
  cmdBench->add_option("--sizes", benchArgs.sizes, "Ascending place counts")
      ->required()
      ->delimiter(',');
  cmdBench->add_option("--out", benchArgs.outCsv, "Output CSV path");
  cmdBench->add_option("--work-dir", benchArgs.workDir, "Scratch directory");
  addConfigFlags(cmdBench, benchArgs.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmdPre->parsed()) return runPreprocess(preprocessArgs);
    if (cmdSynth->parsed()) return runSynth(synthArgs);
    if (cmdTrain->parsed()) return runTrain(trainArgs);
    if (cmdQuery->parsed()) return runQuery(queryArgs);
    if (cmdEval->parsed()) return runEval(evalArgs);
    if (cmdBench->parsed()) return runBench(benchArgs);
  } catch (const vprtempo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vprtempo::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return 3;
  } catch (const vprtempo::ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 4;
  } catch (const vprtempo::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const vprtempo::InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 6;
  } catch (const vprtempo::InvalidStateError& e) {
    std::cerr << "invalid state: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
