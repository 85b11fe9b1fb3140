#include "gazekit/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gazekit/rng.hpp"

namespace gazekit {

void ArchConfig::validate() const {
    require(c1 >= 1 && c2 >= 1, Err::bad_arch,
            "channel counts must be >= 1, got c1=" + std::to_string(c1) + " c2=" + std::to_string(c2));
}

int64_t ArchConfig::param_count() const {
    validate();
    const int64_t conv1 = static_cast<int64_t>(c1) * (kernel * kernel + 1);
    const int64_t conv2 = static_cast<int64_t>(c2) * (static_cast<int64_t>(c1) * kernel * kernel + 1);
    const int64_t fc1 = static_cast<int64_t>(fc1_units) * (fc1_inputs() + 1);
    const int64_t fc2 = static_cast<int64_t>(classes) * (fc1_units + 1);
    return conv1 + conv2 + fc1 + fc2;
}

int64_t param_count(const ArchConfig& arch) { return arch.param_count(); }

namespace {

void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
}

}  // namespace

Network init_params(const ArchConfig& arch, uint64_t seed) {
    arch.validate();
    Network net;
    net.arch = arch;
    net.rng_seed = seed;
    const int k = ArchConfig::kernel;

    net.conv1_w = Tensor::zeros({arch.c1, 1, k, k});
    net.conv1_b = Tensor::zeros({arch.c1});
    net.conv2_w = Tensor::zeros({arch.c2, arch.c1, k, k});
    net.conv2_b = Tensor::zeros({arch.c2});
    net.fc1_w = Tensor::zeros({ArchConfig::fc1_units, arch.fc1_inputs()});
    net.fc1_b = Tensor::zeros({ArchConfig::fc1_units});
    net.fc2_w = Tensor::zeros({ArchConfig::classes, ArchConfig::fc1_units});
    net.fc2_b = Tensor::zeros({ArchConfig::classes});

    Rng rng(derive_seed(seed, {fnv1a64("init")}));
    glorot_fill(net.conv1_w, 1 * k * k, arch.c1 * k * k, rng);
    glorot_fill(net.conv2_w, arch.c1 * k * k, arch.c2 * k * k, rng);
    glorot_fill(net.fc1_w, arch.fc1_inputs(), ArchConfig::fc1_units, rng);
    glorot_fill(net.fc2_w, ArchConfig::fc1_units, ArchConfig::classes, rng);
    return net;
}

NetT<double> to_double(const Network& net) {
    NetT<double> out;
    out.arch = net.arch;
    out.rng_seed = net.rng_seed;
    auto src = net.params();
    auto dst = out.params();
    for (size_t i = 0; i < src.size(); ++i) {
        dst[i]->shape = src[i]->shape;
        dst[i]->data.assign(src[i]->data.begin(), src[i]->data.end());
    }
    return out;
}

template <typename F>
TensorT<F> forward(const NetT<F>& net, const TensorT<F>& batch, ForwardTrace<F>* trace) {
    require(batch.rank() == 4, Err::shape, "batch must be rank 4, got " + batch.shape_str());
    const int n = batch.dim(0);
    check_shape(batch, {n, 1, ArchConfig::input_hw, ArchConfig::input_hw}, "network input");

    ForwardTrace<F> local;
    ForwardTrace<F>& t = trace ? *trace : local;
    if (trace) t.x = batch;

    t.conv1_out = conv_forward(batch, net.conv1_w, net.conv1_b);
    t.relu1_out = relu(t.conv1_out);
    t.pool1 = pool_forward(t.relu1_out);
    t.conv2_out = conv_forward(t.pool1.y, net.conv2_w, net.conv2_b);
    t.relu2_out = relu(t.conv2_out);
    t.pool2 = pool_forward(t.relu2_out);

    t.flat = t.pool2.y;  // row-major (C,H,W) flattening per sample
    t.flat.shape = {n, net.arch.fc1_inputs()};
    t.fc1_out = fc_forward(t.flat, net.fc1_w, net.fc1_b);
    t.relu3_out = relu(t.fc1_out);
    t.logits = fc_forward(t.relu3_out, net.fc2_w, net.fc2_b);
    return t.logits;
}

template <typename F>
F backward(const NetT<F>& net, const ForwardTrace<F>& trace, std::span<const int> labels,
           Gradients<F>& grads) {
    auto xent = softmax_xent(trace.logits, labels);

    auto fc2 = fc_backward(trace.relu3_out, net.fc2_w, xent.grad);
    grads.fc2_w = std::move(fc2.w);
    grads.fc2_b = std::move(fc2.b);

    auto g_fc1_out = relu_backward(trace.fc1_out, fc2.x);
    auto fc1 = fc_backward(trace.flat, net.fc1_w, g_fc1_out);
    grads.fc1_w = std::move(fc1.w);
    grads.fc1_b = std::move(fc1.b);

    TensorT<F> g_pool2 = std::move(fc1.x);
    g_pool2.shape = trace.pool2.y.shape;
    auto g_relu2 = pool_backward(g_pool2, trace.pool2.argmax, trace.relu2_out.shape);
    auto g_conv2 = relu_backward(trace.conv2_out, g_relu2);
    auto conv2 = conv_backward(trace.pool1.y, net.conv2_w, g_conv2);
    grads.conv2_w = std::move(conv2.w);
    grads.conv2_b = std::move(conv2.b);

    auto g_relu1 = pool_backward(conv2.x, trace.pool1.argmax, trace.relu1_out.shape);
    auto g_conv1 = relu_backward(trace.conv1_out, g_relu1);
    auto conv1 = conv_backward(trace.x, net.conv1_w, g_conv1);
    grads.conv1_w = std::move(conv1.w);
    grads.conv1_b = std::move(conv1.b);
    return xent.loss;
}

template TensorT<float> forward<float>(const NetT<float>&, const TensorT<float>&, ForwardTrace<float>*);
template TensorT<double> forward<double>(const NetT<double>&, const TensorT<double>&, ForwardTrace<double>*);
template float backward<float>(const NetT<float>&, const ForwardTrace<float>&, std::span<const int>, Gradients<float>&);
template double backward<double>(const NetT<double>&, const ForwardTrace<double>&, std::span<const int>, Gradients<double>&);

std::vector<int> predict(const Network& net, const Tensor& batch) {
    const Tensor logits = forward(net, batch);
    const int n = logits.dim(0), k = logits.dim(1);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const float* row = logits.ptr() + static_cast<size_t>(i) * k;
        int best = 0;  // ties resolve to the lowest class index
        for (int j = 1; j < k; ++j)
            if (row[j] > row[best]) best = j;
        labels[i] = best;
    }
    return labels;
}

namespace {

constexpr char kMagic[4] = {'G', 'Z', 'K', '1'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const uint8_t* p;
    size_t len, pos = 0;
    std::string origin;

    void need(size_t n, const char* what) {
        if (pos + n > len)
            fail(Err::format, origin + ": truncated file reading " + what + " at byte " +
                                  std::to_string(pos));
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32(const char* what) {
        uint32_t v = u32(what);
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

}  // namespace

void save_model(const Network& net, const std::filesystem::path& path) {
    net.arch.validate();
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<uint32_t>(net.arch.c1));
    put_u32(out, static_cast<uint32_t>(net.arch.c2));
    put_u32(out, ArchConfig::input_hw);
    put_u32(out, ArchConfig::kernel);
    put_u32(out, ArchConfig::fc1_units);
    put_u32(out, ArchConfig::classes);
    for (const Tensor* t : net.params())
        for (float v : t->data) put_f32(out, v);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Err::io, "cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    require(f.good(), Err::io, "short write to " + path.string());
}

Network load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Err::io, "cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{reinterpret_cast<const uint8_t*>(buf.data()), buf.size(), 0, path.string()};

    r.need(4, "magic");
    if (std::memcmp(r.p, kMagic, 4) != 0) fail(Err::format, r.origin + ": bad magic, not a GZK1 model");
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kVersion)
        fail(Err::format, r.origin + ": unsupported format version " + std::to_string(version));

    ArchConfig arch;
    arch.c1 = static_cast<int>(r.u32("c1"));
    arch.c2 = static_cast<int>(r.u32("c2"));
    const uint32_t input_hw = r.u32("input_hw");
    const uint32_t kernel = r.u32("kernel");
    const uint32_t fc1_units = r.u32("fc1_units");
    const uint32_t classes = r.u32("classes");
    if (input_hw != ArchConfig::input_hw || kernel != ArchConfig::kernel ||
        fc1_units != ArchConfig::fc1_units || classes != ArchConfig::classes)
        fail(Err::validation, r.origin + ": architecture header does not match the fixed C-S-C-S-FC-FC layout");
    if (arch.c1 < 1 || arch.c2 < 1 || arch.c1 > 1024 || arch.c2 > 1024)
        fail(Err::validation, r.origin + ": implausible channel counts c1=" + std::to_string(arch.c1) +
                                  " c2=" + std::to_string(arch.c2));

    Network net = init_params(arch, 0);  // allocates the right shapes
    for (size_t i = 0; i < net.params().size(); ++i) {
        Tensor* t = net.params()[i];
        for (size_t j = 0; j < t->data.size(); ++j) {
            const float v = r.f32(kParamNames[i]);
            if (!std::isfinite(v))
                fail(Err::validation, r.origin + ": non-finite weight in " + kParamNames[i] +
                                          " at element " + std::to_string(j));
            t->data[j] = v;
        }
    }
    if (r.pos != r.len)
        fail(Err::format, r.origin + ": " + std::to_string(r.len - r.pos) + " trailing bytes");
    net.rng_seed = 0;
    return net;
}

}  // namespace gazekit
