#include "sofa/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace sofa::data {

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

namespace {
constexpr const char* kMagic = "SOFA-EEG-1\n";
AccessGuard* g_guard = nullptr;
}  // namespace

void set_access_guard(AccessGuard* g) { g_guard = g; }
AccessGuard* access_guard() { return g_guard; }

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw FormatError("unknown split tag: " + name);
}

const EegSample& Dataset::sample(std::size_t i) const {
    if (i >= samples.size()) throw DataError("sample index out of range");
    if (g_guard) g_guard->on_access(samples[i].subject);
    return samples[i];
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.n_classes = n_classes;
    out.subjects = subjects;
    out.t_len = t_len;
    out.d_in = d_in;
    for (auto i : indices) {
        out.samples.push_back(sample(i));
        out.splits.push_back(splits[i]);
    }
    return out;
}

std::vector<std::size_t> Dataset::indices_of(const std::vector<int>& keep_subjects,
                                             Split split) const {
    std::set<int> keep(keep_subjects.begin(), keep_subjects.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (splits[i] == split && keep.count(samples[i].subject)) out.push_back(i);
    return out;
}

std::uint64_t Dataset::content_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001B3ull;
        }
    };
    mix(&n_classes, sizeof(n_classes));
    mix(&t_len, sizeof(t_len));
    mix(&d_in, sizeof(d_in));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        mix(&samples[i].label, sizeof(int));
        mix(&samples[i].subject, sizeof(int));
        int sp = int(splits[i]);
        mix(&sp, sizeof(sp));
        mix(samples[i].signal.v.data(), samples[i].signal.v.size() * sizeof(double));
    }
    return h;
}

void Dataset::validate() const {
    if (splits.size() != samples.size())
        throw InconsistentError("dataset: split tags do not cover all samples");
    std::set<int> declared(subjects.begin(), subjects.end());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const EegSample& s = samples[i];
        if (s.signal.rank() != 2 || s.signal.shape[0] != t_len || s.signal.shape[1] != d_in)
            throw InconsistentError("dataset: sample " + std::to_string(i) + " has shape " +
                                    shape_str(s.signal.shape) + ", expected [" +
                                    std::to_string(t_len) + "," + std::to_string(d_in) + "]");
        if (s.label < 0 || s.label >= n_classes)
            throw InconsistentError("dataset: sample " + std::to_string(i) + " label out of range");
        if (!declared.count(s.subject))
            throw InconsistentError("dataset: sample " + std::to_string(i) +
                                    " has undeclared subject id");
        if (!s.signal.all_finite())
            throw InconsistentError("dataset: sample " + std::to_string(i) +
                                    " contains non-finite values");
    }
}

void save_dataset(const std::string& path, const Dataset& ds) {
    ds.validate();
    nlohmann::json header;
    header["version"] = 1;
    header["n_samples"] = ds.samples.size();
    header["T"] = ds.t_len;
    header["d_in"] = ds.d_in;
    header["n_classes"] = ds.n_classes;
    header["subjects"] = ds.subjects;
    auto& records = header["records"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        records.push_back({{"subject", ds.samples[i].subject},
                           {"label", ds.samples[i].label},
                           {"split", split_name(ds.splits[i])}});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << kMagic << header.dump() << '\0';
    std::vector<float> buf;
    for (auto& s : ds.samples) {
        buf.resize(s.signal.v.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = float(s.signal.v[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  std::streamsize(buf.size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path);

    std::string magic(std::strlen(kMagic), '\0');
    in.read(magic.data(), std::streamsize(magic.size()));
    if (!in || magic != kMagic) throw BadMagicError("bad dataset magic in " + path);

    std::string header_text;
    std::getline(in, header_text, '\0');
    if (!in) throw TruncatedError("truncated dataset header in " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("unparsable dataset header in " + path + ": " + e.what());
    }
    if (header.value("version", 0) != 1)
        throw BadMagicError("unsupported dataset version in " + path);

    Dataset ds;
    const std::size_t n_samples = header.at("n_samples");
    ds.t_len = header.at("T");
    ds.d_in = header.at("d_in");
    ds.n_classes = header.at("n_classes");
    ds.subjects = header.at("subjects").get<std::vector<int>>();
    const auto& records = header.at("records");
    if (records.size() != n_samples)
        throw InconsistentError("dataset header record count mismatch in " + path);

    const std::size_t per_sample = ds.t_len * ds.d_in;
    std::vector<float> buf(per_sample);
    for (std::size_t i = 0; i < n_samples; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()),
                std::streamsize(per_sample * sizeof(float)));
        if (!in) throw TruncatedError("truncated dataset blob in " + path + " at sample " +
                                      std::to_string(i));
        EegSample s;
        s.signal = Tensor::zeros({ds.t_len, ds.d_in});
        for (std::size_t j = 0; j < per_sample; ++j) s.signal.v[j] = double(buf[j]);
        s.subject = records[i].at("subject");
        s.label = records[i].at("label");
        ds.samples.push_back(std::move(s));
        ds.splits.push_back(split_from_name(records[i].at("split")));
    }
    // trailing garbage means the writer and header disagree
    char extra;
    if (in.read(&extra, 1))
        throw InconsistentError("dataset blob longer than header declares in " + path);
    ds.validate();
    return ds;
}

Dataset crop_window(const Dataset& ds, std::size_t start_ms, std::size_t end_ms) {
    if (start_ms >= end_ms) throw DataError("crop_window: empty window");
    if (end_ms > ds.t_len)
        throw DataError("crop_window: window [" + std::to_string(start_ms) + "," +
                        std::to_string(end_ms) + ") exceeds raw length " +
                        std::to_string(ds.t_len));
    Dataset out;
    out.n_classes = ds.n_classes;
    out.subjects = ds.subjects;
    out.t_len = end_ms - start_ms;
    out.d_in = ds.d_in;
    out.splits = ds.splits;
    for (auto& s : ds.samples) {
        EegSample c;
        c.label = s.label;
        c.subject = s.subject;
        c.signal = Tensor::zeros({out.t_len, out.d_in});
        std::copy_n(&s.signal.v[start_ms * ds.d_in], out.t_len * out.d_in, c.signal.v.data());
        out.samples.push_back(std::move(c));
    }
    return out;
}

Dataset synth_benchmark(const SynthConfig& cfg) {
    if (cfg.n_subjects < 1 || cfg.n_classes < 1 || cfg.per_class < 1 || cfg.t_len < 1 ||
        cfg.d_in < 1)
        throw DataError("synth_benchmark: all counts must be >= 1");

    const std::size_t d_lat = std::min<std::size_t>(16, cfg.d_in);
    Rng master(cfg.seed);

    // class prototype trajectories: 3 sinusoids per latent channel
    Rng proto_rng(master.derive(1));
    std::vector<Tensor> protos;  // [t_len, d_lat]
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        Tensor p = Tensor::zeros({cfg.t_len, d_lat});
        for (std::size_t l = 0; l < d_lat; ++l) {
            double amp[3], freq[3], phase[3];
            for (int q = 0; q < 3; ++q) {
                amp[q] = proto_rng.uniform(0.3, 1.0);
                freq[q] = proto_rng.uniform(1.0, 8.0);
                phase[q] = proto_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            }
            for (std::size_t t = 0; t < cfg.t_len; ++t) {
                double x = 0.0;
                for (int q = 0; q < 3; ++q)
                    x += amp[q] * std::sin(2.0 * 3.14159265358979323846 * freq[q] * double(t) /
                                               double(cfg.t_len) +
                                           phase[q]);
                p.at2(t, l) = x;
            }
        }
        protos.push_back(std::move(p));
    }

    // subject mixing matrices and gains
    Rng subj_rng(master.derive(2));
    std::vector<Tensor> mixing;  // [d_lat, d_in]
    std::vector<double> gain;
    const double mix_sigma = 1.0 / std::sqrt(double(d_lat));
    for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
        Tensor a = Tensor::zeros({d_lat, cfg.d_in});
        for (auto& x : a.v) x = mix_sigma * subj_rng.normal();
        mixing.push_back(std::move(a));
        gain.push_back(subj_rng.uniform(0.5, 1.5));
    }

    Rng noise_rng(master.derive(3));
    Dataset ds;
    ds.n_classes = int(cfg.n_classes);
    ds.t_len = cfg.t_len;
    ds.d_in = cfg.d_in;
    for (std::size_t s = 0; s < cfg.n_subjects; ++s) ds.subjects.push_back(int(s));

    const std::size_t n_val = cfg.per_class / 6;
    const std::size_t n_test = cfg.per_class / 6;
    const std::size_t n_train = cfg.per_class - n_val - n_test;

    for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
        for (std::size_t c = 0; c < cfg.n_classes; ++c) {
            // base = gain_s * P_c A_s, shared by all draws of this cell
            Tensor base = Tensor::zeros({cfg.t_len, cfg.d_in});
            for (std::size_t t = 0; t < cfg.t_len; ++t)
                for (std::size_t l = 0; l < d_lat; ++l) {
                    const double pv = protos[c].at2(t, l);
                    if (pv == 0.0) continue;
                    for (std::size_t j = 0; j < cfg.d_in; ++j)
                        base.at2(t, j) += pv * mixing[s].at2(l, j);
                }
            for (auto& x : base.v) x *= gain[s];

            for (std::size_t idx = 0; idx < cfg.per_class; ++idx) {
                EegSample sample;
                sample.subject = int(s);
                sample.label = int(c);
                sample.signal = base;
                if (cfg.noise_sigma > 0.0)
                    for (auto& x : sample.signal.v) x += cfg.noise_sigma * noise_rng.normal();
                ds.samples.push_back(std::move(sample));
                ds.splits.push_back(idx < n_train          ? Split::train
                                    : idx < n_train + n_val ? Split::val
                                                            : Split::test);
            }
        }
    }
    ds.validate();
    return ds;
}

KShotSplit kshot_split(const Dataset& ds, int target_subject, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw DataError("kshot_split: k must be >= 1");
    if (std::find(ds.subjects.begin(), ds.subjects.end(), target_subject) == ds.subjects.end())
        throw DataError("kshot_split: unknown target subject " + std::to_string(target_subject));

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.subject_of(i) == target_subject && ds.split_of(i) == Split::train)
            by_class[ds.label_of(i)].push_back(i);

    KShotSplit out;
    out.target_subject = target_subject;
    out.k = k;
    Rng rng(seed);
    for (int c = 0; c < ds.n_classes; ++c) {
        auto it = by_class.find(c);
        const std::size_t have = it == by_class.end() ? 0 : it->second.size();
        if (have < k)
            throw DataError("kshot_split: class " + std::to_string(c) + " has only " +
                            std::to_string(have) + " target train samples, need " +
                            std::to_string(k));
        std::vector<std::size_t> pool = it->second;
        rng.shuffle(pool);
        for (std::size_t i = 0; i < pool.size(); ++i)
            (i < k ? out.selected : out.remainder).push_back(pool[i]);
    }
    std::sort(out.selected.begin(), out.selected.end());
    std::sort(out.remainder.begin(), out.remainder.end());
    return out;
}

}  // namespace sofa::data
