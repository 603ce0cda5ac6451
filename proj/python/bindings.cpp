#include <pybind11/gil_safe_call_once.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "cdse/data/manifest.hpp"
#include "cdse/data/mixing.hpp"
#include "cdse/data/synthetic.hpp"
#include "cdse/error.hpp"
#include "cdse/harness/config.hpp"
#include "cdse/harness/run.hpp"
#include "cdse/harness/train.hpp"
#include "cdse/metrics/pesq.hpp"
#include "cdse/metrics/quality.hpp"
#include "cdse/metrics/stoi.hpp"
#include "cdse/metrics/wer.hpp"
#include "cdse/metrics/wiener.hpp"
#include "cdse/signal/stft.hpp"
#include "cdse/signal/wav_io.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace cdse;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

signal::Waveform to_wave(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array of samples");
  return signal::Waveform(std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const signal::Waveform& w) {
  Array out(static_cast<py::ssize_t>(w.size()));
  std::copy(w.data().begin(), w.data().end(), out.mutable_data());
  return out;
}

Array to_array(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
  Array out(shape);
  std::copy(c.data_ptr<double>(), c.data_ptr<double>() + c.numel(), out.mutable_data());
  return out;
}

torch::Tensor to_tensor(const Array& a) {
  std::vector<std::int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cross-domain speech enhancement: STFT embedding, metrics, training and evaluation runs.";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::exception<Error>(m, "Error", PyExc_RuntimeError); });
  // Library errors surface as cdse.Error with the error code in .code.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.attr("SAMPLE_RATE") = signal::kSampleRate;

  // signal
  m.def("plan_stft", [](std::int64_t n) {
    const auto p = signal::plan_stft(n);
    return py::dict(py::arg("hop") = p.hop, py::arg("n_frames") = p.n_frames, py::arg("n_bins") = p.n_bins,
                    py::arg("pad_left") = p.pad_left, py::arg("pad_right") = p.pad_right,
                    py::arg("original_length") = p.original_length);
  }, py::arg("n"));
  m.def("stft", [](const Array& x) {
    const auto w = to_wave(x);
    const auto tf = signal::stft(w, signal::plan_stft(w.size()));
    return py::make_tuple(to_array(tf.magnitude), to_array(tf.phase));
  }, py::arg("samples"), "Magnitude and phase, each [256 bins, 256 frames].");
  m.def("istft", [](const Array& magnitude, const Array& phase, std::int64_t n) {
    return to_array(signal::istft(to_tensor(magnitude), to_tensor(phase), signal::plan_stft(n)));
  }, py::arg("magnitude"), py::arg("phase"), py::arg("n"));
  m.def("read_wav", [](const fs::path& p) { return to_array(signal::read_wav(p)); });
  m.def("write_wav", [](const fs::path& p, const Array& x) { signal::write_wav(p, to_wave(x)); });

  // data
  m.def("mix_at_snr", [](const Array& clean, const Array& noise, double snr_db, std::uint64_t seed) {
    return to_array(data::mix_at_snr(to_wave(clean), to_wave(noise), snr_db, seed).noisy);
  }, py::arg("clean"), py::arg("noise"), py::arg("snr_db"), py::arg("seed"));
  m.def("measured_snr_db", [](const Array& clean, const Array& noisy) {
    return data::measured_snr_db(to_wave(clean), to_wave(noisy));
  });
  m.def("generate_corpus", [](const fs::path& dir, const std::string& yaml, bool cache) {
    const auto manifest = data::generate_corpus(dir, harness::parse_corpus_config(yaml));
    if (cache) data::write_mixed_cache(manifest);
    return dir / "manifest.jsonl";
  }, py::arg("dir"), py::arg("config") = "", py::arg("cache") = true);

  // metrics
  m.def("ssnr", [](const Array& c, const Array& e) { return metrics::ssnr(to_wave(c), to_wave(e)); });
  m.def("stoi", [](const Array& c, const Array& e) { return metrics::stoi(to_wave(c), to_wave(e)); });
  m.def("llr", [](const Array& c, const Array& e) { return metrics::llr(to_wave(c), to_wave(e)); });
  m.def("wss", [](const Array& c, const Array& e) { return metrics::wss(to_wave(c), to_wave(e)); });
  m.def("composite", [](double pesq, double llr, double wss, double ssnr_db) {
    const auto c = metrics::composite_measures(pesq, llr, wss, ssnr_db);
    return py::dict(py::arg("csig") = c.csig, py::arg("cbak") = c.cbak, py::arg("covl") = c.covl);
  }, py::arg("pesq"), py::arg("llr"), py::arg("wss"), py::arg("ssnr_db"));
  m.def("wer", [](const std::string& ref, const std::string& hyp) { return metrics::wer(ref, hyp); });
  m.def("wiener_baseline", [](const Array& noisy) { return to_array(metrics::wiener_baseline(to_wave(noisy))); });

  // runs
  m.def("load_run_config", [](const fs::path& p) { return to_python(nlohmann::json(harness::load_run_config(p))); });
  m.def("default_run_config", [](const std::string& framework) {
    return to_python(nlohmann::json(harness::RunConfig::defaults(harness::framework_from_string(framework))));
  });
  m.def("validate_run_config", [](const py::object& cfg) {
    return to_python(nlohmann::json(harness::parse_run_config(from_python(cfg).dump())));
  }, "Fills in framework defaults and checks the wiring; returns the full config.");
  m.def("train", [](const py::object& cfg, const fs::path& run_dir) {
    const auto c = harness::parse_run_config(from_python(cfg).dump());
    harness::TrainResult r;
    {
      py::gil_scoped_release release;
      r = harness::train_run(c, run_dir);
    }
    return to_python(nlohmann::json(r.epochs));
  }, py::arg("config"), py::arg("run_dir"), "Returns the per-epoch loss log.");
  m.def("enhance", [](const fs::path& run_dir) {
    py::gil_scoped_release release;
    return harness::enhance_run(run_dir).size();
  }, py::arg("run_dir"));
  m.def("evaluate", [](const fs::path& run_dir, const fs::path& pesq, const std::string& asr_url) {
    const metrics::ExternalPesq scorer(pesq);
    harness::EvaluateOptions opts;
    opts.pesq = &scorer;
    if (!asr_url.empty()) {
      metrics::AsrConfig asr;
      asr.url = asr_url;
      opts.asr = asr;
    }
    harness::RunRecord rec;
    {
      py::gil_scoped_release release;
      rec = harness::evaluate_run(run_dir, opts);
    }
    return to_python(nlohmann::json(rec.aggregate));
  }, py::arg("run_dir"), py::arg("pesq"), py::arg("asr_url") = "");
  m.def("report", [](const std::vector<fs::path>& runs, const fs::path& out) {
    std::vector<harness::RunRecord> records;
    for (const auto& r : runs) records.push_back(harness::load_run(r));
    const auto files = harness::write_report(records, out);
    return py::dict(py::arg("table_csv") = files.table_csv, py::arg("table_txt") = files.table_txt,
                    py::arg("boxplot_csv") = files.boxplot_csv);
  }, py::arg("runs"), py::arg("out"));
}
