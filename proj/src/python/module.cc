// Copyright 2026 The rvqkit Authors.
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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "rvqkit/audio.h"
#include "rvqkit/codec.h"
#include "rvqkit/dsp.h"
#include "rvqkit/losses.h"
#include "rvqkit/metrics.h"
#include "rvqkit/quantizer.h"
#include "rvqkit/status.h"

namespace py = pybind11;

namespace rvqkit {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

AudioBuffer ToBuffer(const Array& samples, int sample_rate) {
  if (samples.ndim() != 1) throw py::value_error("audio must be 1-D");
  return AudioBuffer(std::vector<double>(samples.data(), samples.data() + samples.size()),
                     sample_rate);
}

Array FromVector(std::span<const double> v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const size_t rows = static_cast<size_t>(a.shape(0));
  const size_t cols = static_cast<size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array FromMatrix(const Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<uint32_t> CodesArray(const CodeSequence& c) {
  py::array_t<uint32_t> out({static_cast<py::ssize_t>(c.num_frames),
                             static_cast<py::ssize_t>(c.num_levels),
                             static_cast<py::ssize_t>(c.num_groups)});
  std::copy(c.codes.begin(), c.codes.end(), out.mutable_data());
  return out;
}

py::bytes ToBytes(const std::vector<unsigned char>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<unsigned char> FromBytes(const py::bytes& b) {
  const std::string s = b;
  return std::vector<unsigned char>(s.begin(), s.end());
}

py::object Optional(const MetricValue& v) {
  return v.defined() ? py::cast(*v.value) : py::none();
}

}  // namespace
}  // namespace rvqkit

PYBIND11_MODULE(_rvqkit, m) {
  using namespace rvqkit;
  m.doc() = "Residual vector quantization codec toolkit";

  static py::exception<Error> error(m, "RvqkitError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error((std::string(ErrorCodeName(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("read_wav", [](const std::string& path) {
    const AudioBuffer b = ReadWav(path);
    return py::make_tuple(FromVector(b.samples()), b.sample_rate());
  }, py::arg("path"), "Returns (samples, sample_rate).");
  m.def("write_wav", [](const std::string& path, const Array& samples, int rate,
                        bool float32) {
    WriteWav(ToBuffer(samples, rate), path,
             float32 ? WavEncoding::kFloat32 : WavEncoding::kPcm16);
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate"),
        py::arg("float32") = false);
  m.def("resample", [](const Array& samples, int rate, int target) {
    return FromVector(Resample(ToBuffer(samples, rate), target).samples());
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  m.def("stft_magnitude", [](const Array& samples, int rate, int window, int hop) {
    return FromMatrix(Stft(ToBuffer(samples, rate), {window, hop}).Magnitude());
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("window") = 1024,
        py::arg("hop") = 256);
  m.def("mel_spectrogram", [](const Array& samples, int rate, int window, int hop,
                              int n_mels, bool log) {
    MelOptions o;
    o.n_mels = n_mels;
    o.log = log;
    return FromMatrix(ComputeMelSpectrogram(ToBuffer(samples, rate), {window, hop}, o).values);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("window") = 1024,
        py::arg("hop") = 256, py::arg("n_mels") = 80, py::arg("log") = true);
  m.def("griffin_lim", [](const Array& magnitude, int rate, int window, int hop,
                          int iterations, uint64_t seed) {
    return FromVector(
        GriffinLim(ToMatrix(magnitude), {window, hop}, rate, iterations, std::nullopt, seed)
            .audio.samples());
  }, py::arg("magnitude"), py::arg("sample_rate"), py::arg("window") = 1024,
        py::arg("hop") = 256, py::arg("iterations") = 60, py::arg("seed") = 0);

  py::class_<RvqQuantizer>(m, "RvqQuantizer")
      .def_property_readonly("num_levels", &RvqQuantizer::num_levels)
      .def_property_readonly("dim", &RvqQuantizer::dim)
      .def_property_readonly("codebook_size", &RvqQuantizer::codebook_size)
      .def("codebook", [](const RvqQuantizer& q, size_t l) {
        if (l >= q.num_levels()) throw py::index_error("level out of range");
        return FromMatrix(q.level(l).codebook.codes());
      })
      .def("encode", [](const RvqQuantizer& q, const Array& frames, size_t n_levels) {
        const QuantizedFrames out = RvqEncode(q, ToMatrix(frames), n_levels);
        return py::make_tuple(CodesArray(out.codes), FromMatrix(out.reconstruction));
      }, py::arg("frames"), py::arg("n_levels"),
           "Returns (codes[T, L, 1], reconstruction[T, D]).");
  m.def("train_rvq", [](const Array& frames, size_t levels, size_t codebook_size,
                        int epochs, uint64_t seed) {
    return TrainRvq(ToMatrix(frames), levels, codebook_size, epochs, seed);
  }, py::arg("frames"), py::arg("num_levels"), py::arg("codebook_size"),
        py::arg("epochs") = 10, py::arg("seed") = 0);
  m.def("levels_for_bitrate", &LevelsForBitrate, py::arg("bitrate"),
        py::arg("codebook_size"), py::arg("frame_rate"), py::arg("max_levels"));

  m.def("time_domain_loss", [](const Array& s, const Array& s_hat, int rate,
                               const std::string& norm) {
    return TimeDomainLoss(ToBuffer(s, rate), ToBuffer(s_hat, rate), ParseNormKind(norm));
  }, py::arg("s"), py::arg("s_hat"), py::arg("sample_rate"), py::arg("norm") = "l1");
  m.def("multi_scale_mel_loss", [](const Array& s, const Array& s_hat, int rate,
                                   const std::string& norm) {
    return MultiScaleMelLoss(ToBuffer(s, rate), ToBuffer(s_hat, rate),
                             ScaleSet::Default(), ParseNormKind(norm));
  }, py::arg("s"), py::arg("s_hat"), py::arg("sample_rate"), py::arg("norm") = "l1");

  m.def("mcd", [](const Array& r, const Array& d, int rate) {
    return Mcd(ToBuffer(r, rate), ToBuffer(d, rate));
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"));
  m.def("si_snr", [](const Array& r, const Array& d, int rate) {
    return SiSnr(ToBuffer(r, rate), ToBuffer(d, rate));
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"));
  m.def("ci_sdr", [](const Array& r, const Array& d, int rate, int taps) {
    return CiSdr(ToBuffer(r, rate), ToBuffer(d, rate), taps);
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"),
        py::arg("taps") = 512);
  m.def("stoi", [](const Array& r, const Array& d, int rate) {
    return Stoi(ToBuffer(r, rate), ToBuffer(d, rate)).value;
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"));
  m.def("f0_rmse", [](const Array& r, const Array& d, int rate) {
    return Optional(F0Rmse(ToBuffer(r, rate), ToBuffer(d, rate)));
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"));
  m.def("f0_corr", [](const Array& r, const Array& d, int rate) {
    return Optional(F0Corr(ToBuffer(r, rate), ToBuffer(d, rate)));
  }, py::arg("reference"), py::arg("degraded"), py::arg("sample_rate"));
  m.def("evaluate", [](const Array& r, int ref_rate, const Array& d, int deg_rate,
                       std::vector<std::string> metrics) {
    EvalConfig config;
    if (!metrics.empty()) config.metrics = std::move(metrics);
    return EvaluatePair(ToBuffer(r, ref_rate), ToBuffer(d, deg_rate), config)
        .ToJson()
        .dump();
  }, py::arg("reference"), py::arg("reference_rate"), py::arg("degraded"),
        py::arg("degraded_rate"), py::arg("metrics") = std::vector<std::string>{},
        "Returns the report as a JSON string.");

  py::class_<CodecConfig>(m, "CodecConfig")
      .def(py::init<>())
      .def_readwrite("sample_rate", &CodecConfig::sample_rate)
      .def_readwrite("window", &CodecConfig::window)
      .def_readwrite("hop", &CodecConfig::hop)
      .def_readwrite("n_mels", &CodecConfig::n_mels)
      .def_readwrite("codebook_size", &CodecConfig::codebook_size)
      .def_readwrite("num_levels", &CodecConfig::num_levels)
      .def_readwrite("num_groups", &CodecConfig::num_groups)
      .def_readwrite("epochs", &CodecConfig::epochs)
      .def_readwrite("gl_iterations", &CodecConfig::gl_iterations);

  py::class_<SpectralCodec>(m, "SpectralCodec")
      .def_property_readonly("config", &SpectralCodec::config)
      .def("encode", [](const SpectralCodec& c, const Array& samples, double bitrate) {
        return ToBytes(SaveStream(
            c.Encode(ToBuffer(samples, c.config().sample_rate), bitrate).stream));
      }, py::arg("samples"), py::arg("bitrate"), "Returns the serialized stream.")
      .def("decode", [](const SpectralCodec& c, const py::bytes& stream) {
        return FromVector(c.Decode(LoadStream(FromBytes(stream))).samples());
      }, py::arg("stream"))
      .def("save", [](const SpectralCodec& c) { return ToBytes(SaveModel(c)); });
  m.def("train_codec", [](const std::vector<Array>& corpus, const CodecConfig& config,
                          uint64_t seed) {
    std::vector<AudioBuffer> buffers;
    for (const auto& a : corpus) buffers.push_back(ToBuffer(a, config.sample_rate));
    return TrainCodec(buffers, config, seed);
  }, py::arg("corpus"), py::arg("config"), py::arg("seed") = 0);
  m.def("load_codec", [](const py::bytes& b) { return LoadModel(FromBytes(b)); },
        py::arg("model_bytes"));
  m.def("stream_info", [](const py::bytes& b) {
    const EncodedStream s = LoadStream(FromBytes(b));
    py::dict d;
    d["sample_rate"] = s.header.sample_rate;
    d["hop"] = s.header.hop;
    d["levels"] = s.header.num_levels_used;
    d["groups"] = s.header.num_groups;
    d["frames"] = s.header.num_frames;
    d["bitrate"] = s.bitrate();
    d["codes"] = CodesArray(s.codes);
    return d;
  }, py::arg("stream_bytes"));
}
