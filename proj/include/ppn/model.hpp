// Copyright 2026 The PPN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PPN_MODEL_HPP_
#define PPN_MODEL_HPP_

#include <array>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppn/codec.hpp"
#include "ppn/common.hpp"
#include "ppn/image.hpp"
#include "ppn/nn.hpp"
#include "ppn/rng.hpp"
#include "ppn/tensor.hpp"

namespace ppn {

struct ModelConfig {
    std::string backbone = "reference";  // "reference" (ResNet50-style) or "small"
    int grid_size = kDefaultGridSize;    // S
    int n_classes = 3;                   // C, background included
    int input_size = 224;                // pixels, square
    int fused_channels = 256;            // width of the fused S x S feature map
    int ppn_channels = 0;                // 0 = default per backbone
    bool ppn_norm = false;               // batchnorm between the PPN layers
    uint64_t init_seed = 1;

    int effective_ppn_channels() const {
        if (ppn_channels > 0) return ppn_channels;
        return backbone == "reference" ? 64 : fused_channels;
    }

    void validate() const {
        if (backbone != "reference" && backbone != "small")
            throw ConfigError("backbone must be 'reference' or 'small'");
        if (n_classes < 2) throw ConfigError("need at least background plus one class");
        if (grid_size < 4) throw ConfigError("grid size too small");
        if (input_size != grid_size * 4)
            throw ConfigError("input_size must be 4x grid_size (stride-4 early feature map)");
        if (fused_channels < 4) throw ConfigError("fused_channels too small");
    }

    nlohmann::ordered_json to_json() const {
        return {{"backbone", backbone},       {"grid_size", grid_size},
                {"n_classes", n_classes},     {"input_size", input_size},
                {"fused_channels", fused_channels}, {"ppn_channels", ppn_channels},
                {"ppn_norm", ppn_norm},       {"init_seed", init_seed}};
    }
    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        cfg.backbone = j.at("backbone").get<std::string>();
        cfg.grid_size = j.at("grid_size").get<int>();
        cfg.n_classes = j.at("n_classes").get<int>();
        cfg.input_size = j.at("input_size").get<int>();
        cfg.fused_channels = j.at("fused_channels").get<int>();
        cfg.ppn_channels = j.at("ppn_channels").get<int>();
        cfg.ppn_norm = j.at("ppn_norm").get<bool>();
        cfg.init_seed = j.at("init_seed").get<uint64_t>();
        return cfg;
    }
};

// Batched network output: class logits and raw offsets per image.
template <typename T>
struct MapsBatch {
    Tensor<T> class_logits;  // N x C x S x S
    Tensor<T> reg;           // N x 2 x S x S

    GridMaps<T> image_logits(int n) const {
        const int c = class_logits.dim(1), s = class_logits.dim(2);
        GridMaps<T> maps(c, s);
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < s; ++i)
                for (int j = 0; j < s; ++j) maps.class_map.at(ch, i, j) = class_logits.at(n, ch, i, j);
        for (int ch = 0; ch < 2; ++ch)
            for (int i = 0; i < s; ++i)
                for (int j = 0; j < s; ++j) maps.reg_map.at(ch, i, j) = reg.at(n, ch, i, j);
        return maps;
    }
};

namespace detail {

// Backbone interface: produces an early (S x S) and a late (~S/8) feature
// map; backward takes the gradients of both taps.
template <typename T>
struct Backbone {
    virtual ~Backbone() = default;
    virtual void build(const ModelConfig& cfg, Rng& rng) = 0;
    virtual void collect(std::vector<Param<T>*>& params) = 0;
    virtual void collect_buffers(std::vector<Buffer<T>*>& bufs) {}
    virtual std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& x, bool train) = 0;
    virtual void backward(const Tensor<T>& d_early, const Tensor<T>& d_late) = 0;
    virtual int early_channels() const = 0;
    virtual int late_channels() const = 0;
    virtual void normalize(Tensor<T>& x) const = 0;
};

// Five stride-2 convolutions; the early tap sits at stride 4 with
// fused_channels width, the late tap at stride 32 with 4x that width.
template <typename T>
struct SmallBackbone : Backbone<T> {
    nn::Conv2d<T> conv[5];
    nn::ReLU<T> relu[5];
    int widths[5] = {};

    void build(const ModelConfig& cfg, Rng& rng) override {
        const int f = cfg.fused_channels;
        const int w[5] = {std::max(8, f / 2), f, f * 2, f * 4, f * 4};
        int in_c = 3;
        for (int i = 0; i < 5; ++i) {
            widths[i] = w[i];
            conv[i].configure("backbone.conv" + std::to_string(i + 1), in_c, w[i], 3, 2, 1, rng);
            in_c = w[i];
        }
    }

    void collect(std::vector<Param<T>*>& params) override {
        for (auto& c : conv) c.collect(params);
    }

    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& x, bool) override {
        Tensor<T> a = relu[0].forward(conv[0].forward(x));
        Tensor<T> early = relu[1].forward(conv[1].forward(a));
        Tensor<T> b = relu[2].forward(conv[2].forward(early));
        b = relu[3].forward(conv[3].forward(b));
        Tensor<T> late = relu[4].forward(conv[4].forward(b));
        return {early, late};
    }

    void backward(const Tensor<T>& d_early, const Tensor<T>& d_late) override {
        Tensor<T> g = conv[4].backward(relu[4].backward(d_late));
        g = conv[3].backward(relu[3].backward(g));
        g = conv[2].backward(relu[2].backward(g));
        nn::add_inplace(g, d_early);
        g = conv[1].backward(relu[1].backward(g));
        conv[0].backward(relu[0].backward(g));
    }

    int early_channels() const override { return widths[1]; }
    int late_channels() const override { return widths[4]; }

    void normalize(Tensor<T>& x) const override {
        for (size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - T(0.5)) / T(0.5);
    }
};

// ResNet50-style bottleneck residual block.
template <typename T>
struct Bottleneck {
    nn::Conv2d<T> conv1, conv2, conv3, down;
    nn::BatchNorm2d<T> bn1, bn2, bn3, bn_down;
    nn::ReLU<T> relu1, relu2, relu3;
    bool has_down = false;
    Tensor<T> identity_;

    void build(const std::string& name, int in_c, int mid_c, int stride, Rng& rng) {
        const int out_c = mid_c * 4;
        conv1.configure(name + ".conv1", in_c, mid_c, 1, 1, 0, rng);
        bn1.configure(name + ".bn1", mid_c);
        conv2.configure(name + ".conv2", mid_c, mid_c, 3, stride, 1, rng);
        bn2.configure(name + ".bn2", mid_c);
        conv3.configure(name + ".conv3", mid_c, out_c, 1, 1, 0, rng);
        bn3.configure(name + ".bn3", out_c);
        has_down = stride != 1 || in_c != out_c;
        if (has_down) {
            down.configure(name + ".downsample.0", in_c, out_c, 1, stride, 0, rng);
            bn_down.configure(name + ".downsample.1", out_c);
        }
    }

    void collect(std::vector<Param<T>*>& params) {
        conv1.collect(params);
        bn1.collect(params);
        conv2.collect(params);
        bn2.collect(params);
        conv3.collect(params);
        bn3.collect(params);
        if (has_down) {
            down.collect(params);
            bn_down.collect(params);
        }
    }
    void collect_buffers(std::vector<Buffer<T>*>& bufs) {
        bn1.collect_buffers(bufs);
        bn2.collect_buffers(bufs);
        bn3.collect_buffers(bufs);
        if (has_down) bn_down.collect_buffers(bufs);
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        identity_ = has_down ? bn_down.forward(down.forward(x), train) : x;
        Tensor<T> y = relu1.forward(bn1.forward(conv1.forward(x), train));
        y = relu2.forward(bn2.forward(conv2.forward(y), train));
        y = bn3.forward(conv3.forward(y), train);
        nn::add_inplace(y, identity_);
        return relu3.forward(y);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> g = relu3.backward(dy);
        Tensor<T> d_skip = g;  // gradient through the identity branch
        g = conv1.backward(bn1.backward(relu1.backward(
            conv2.backward(bn2.backward(relu2.backward(conv3.backward(bn3.backward(g))))))));
        if (has_down) {
            nn::add_inplace(g, down.backward(bn_down.backward(d_skip)));
        } else {
            nn::add_inplace(g, d_skip);
        }
        return g;
    }
};

// ResNet50-style trunk: 7x7/2 stem + maxpool, then 3/4/6/3 bottleneck
// stages. The early tap follows stage 1 (stride 4, 256 channels); the late
// tap is the stage 4 output (stride 32, 2048 channels).
template <typename T>
struct ReferenceBackbone : Backbone<T> {
    nn::Conv2d<T> stem;
    nn::BatchNorm2d<T> stem_bn;
    nn::ReLU<T> stem_relu;
    nn::MaxPool2d<T> pool;
    std::vector<Bottleneck<T>> blocks;
    int stage1_end = 0;

    void build(const ModelConfig& cfg, Rng& rng) override {
        stem.configure("backbone.conv1", 3, 64, 7, 2, 3, rng);
        stem_bn.configure("backbone.bn1", 64);
        const int stage_blocks[4] = {3, 4, 6, 3};
        const int stage_mid[4] = {64, 128, 256, 512};
        int in_c = 64;
        blocks.clear();
        for (int s = 0; s < 4; ++s)
            for (int b = 0; b < stage_blocks[s]; ++b) {
                blocks.emplace_back();
                const int stride = (s > 0 && b == 0) ? 2 : 1;
                blocks.back().build(
                    "backbone.layer" + std::to_string(s + 1) + "." + std::to_string(b), in_c,
                    stage_mid[s], stride, rng);
                in_c = stage_mid[s] * 4;
                if (s == 0 && b == stage_blocks[0] - 1) stage1_end = static_cast<int>(blocks.size());
            }
        (void)cfg;
    }

    void collect(std::vector<Param<T>*>& params) override {
        stem.collect(params);
        stem_bn.collect(params);
        for (auto& b : blocks) b.collect(params);
    }
    void collect_buffers(std::vector<Buffer<T>*>& bufs) override {
        stem_bn.collect_buffers(bufs);
        for (auto& b : blocks) b.collect_buffers(bufs);
    }

    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& x, bool train) override {
        Tensor<T> y = pool.forward(stem_relu.forward(stem_bn.forward(stem.forward(x), train)));
        for (int b = 0; b < stage1_end; ++b) y = blocks[static_cast<size_t>(b)].forward(y, train);
        Tensor<T> early = y;
        for (size_t b = static_cast<size_t>(stage1_end); b < blocks.size(); ++b)
            y = blocks[b].forward(y, train);
        return {early, y};
    }

    void backward(const Tensor<T>& d_early, const Tensor<T>& d_late) override {
        Tensor<T> g = d_late;
        for (size_t b = blocks.size(); b > static_cast<size_t>(stage1_end); --b)
            g = blocks[b - 1].backward(g);
        nn::add_inplace(g, d_early);
        for (size_t b = static_cast<size_t>(stage1_end); b > 0; --b) g = blocks[b - 1].backward(g);
        stem.backward(stem_bn.backward(stem_relu.backward(pool.backward(g))));
    }

    int early_channels() const override { return 256; }
    int late_channels() const override { return 2048; }

    void normalize(Tensor<T>& x) const override {
        static constexpr double mean[3] = {0.485, 0.456, 0.406};
        static constexpr double stddev[3] = {0.229, 0.224, 0.225};
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        for (int img = 0; img < n; ++img)
            for (int c = 0; c < 3; ++c) {
                T* p = &x.at(img, c, 0, 0);
                for (int k = 0; k < h * w; ++k)
                    p[k] = (p[k] - static_cast<T>(mean[c])) / static_cast<T>(stddev[c]);
            }
    }
};

}  // namespace detail

// The full value-detection network: backbone -> 1x1 channel reduction of the
// late map -> bilinear upsample to S x S -> add to the early map -> 4-layer
// PPN -> sibling 1x1 classification and offset-regression heads.
template <typename T = float>
class PpnModel {
public:
    explicit PpnModel(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(cfg_.init_seed);
        if (cfg_.backbone == "small")
            backbone_ = std::make_unique<detail::SmallBackbone<T>>();
        else
            backbone_ = std::make_unique<detail::ReferenceBackbone<T>>();
        backbone_->build(cfg_, rng);
        if (backbone_->early_channels() != cfg_.fused_channels)
            throw ConfigError("early feature map width must equal fused_channels");

        fuse_.configure("fuse", backbone_->late_channels(), cfg_.fused_channels, 1, 1, 0, rng);
        upsample_.out_h = cfg_.grid_size;
        upsample_.out_w = cfg_.grid_size;
        const int pc = cfg_.effective_ppn_channels();
        int in_c = cfg_.fused_channels;
        for (int i = 0; i < 4; ++i) {
            ppn_[i].configure("ppn.conv" + std::to_string(i + 1), in_c, pc, 3, 1, 1, rng);
            if (cfg_.ppn_norm) ppn_bn_[i].configure("ppn.bn" + std::to_string(i + 1), pc);
            in_c = pc;
        }
        head_cls_.configure("head.cls", pc, cfg_.n_classes, 1, 1, 0, rng);
        head_reg_.configure("head.reg", pc, 2, 1, 1, 0, rng);

        backbone_->collect(backbone_params_);
        backbone_->collect_buffers(buffers_);
        params_ = backbone_params_;
        fuse_.collect(params_);
        for (int i = 0; i < 4; ++i) {
            ppn_[i].collect(params_);
            if (cfg_.ppn_norm) {
                ppn_bn_[i].collect(params_);
                ppn_bn_[i].collect_buffers(buffers_);
            }
        }
        head_cls_.collect(params_);
        head_reg_.collect(params_);
    }

    const ModelConfig& config() const { return cfg_; }
    std::vector<Param<T>*>& params() { return params_; }
    std::vector<Buffer<T>*>& buffers() { return buffers_; }

    size_t param_count() const {
        size_t n = 0;
        for (const auto* p : params_) n += p->value.size();
        return n;
    }
    size_t backbone_param_count() const {
        size_t n = 0;
        for (const auto* p : backbone_params_) n += p->value.size();
        return n;
    }

    void zero_grad() {
        for (auto* p : params_) p->grad.zero();
    }

    // images: N x 3 x input_size x input_size, values in [0,1].
    MapsBatch<T> forward(const Tensor<T>& images, bool train) {
        if (images.dim(1) != 3 || images.dim(2) != cfg_.input_size || images.dim(3) != cfg_.input_size)
            throw ShapeError("expected N x 3 x " + std::to_string(cfg_.input_size) + " x " +
                             std::to_string(cfg_.input_size) + " input");
        Tensor<T> x = images;
        backbone_->normalize(x);
        auto [early, late] = backbone_->forward(x, train);
        Tensor<T> fused = upsample_.forward(fuse_.forward(late));
        nn::add_inplace(fused, early);
        Tensor<T> y = fused;
        for (int i = 0; i < 4; ++i) {
            y = ppn_[i].forward(y);
            if (cfg_.ppn_norm) y = ppn_bn_[i].forward(y, train);
            y = ppn_relu_[i].forward(y);
        }
        MapsBatch<T> out;
        out.class_logits = head_cls_.forward(y);
        out.reg = head_reg_.forward(y);
        return out;
    }

    // Backpropagates loss gradients on the output maps; parameter gradients
    // accumulate into params()->grad.
    void backward(const Tensor<T>& d_logits, const Tensor<T>& d_reg) {
        Tensor<T> g = head_cls_.backward(d_logits);
        nn::add_inplace(g, head_reg_.backward(d_reg));
        for (int i = 3; i >= 0; --i) {
            g = ppn_relu_[i].backward(g);
            if (cfg_.ppn_norm) g = ppn_bn_[i].backward(g);
            g = ppn_[i].backward(g);
        }
        Tensor<T> d_late = fuse_.backward(upsample_.backward(g));
        backbone_->backward(g, d_late);
    }

private:
    ModelConfig cfg_;
    std::unique_ptr<detail::Backbone<T>> backbone_;
    nn::Conv2d<T> fuse_;
    nn::BilinearResize<T> upsample_;
    nn::Conv2d<T> ppn_[4];
    nn::BatchNorm2d<T> ppn_bn_[4];
    nn::ReLU<T> ppn_relu_[4];
    nn::Conv2d<T> head_cls_, head_reg_;
    std::vector<Param<T>*> params_;
    std::vector<Param<T>*> backbone_params_;
    std::vector<Buffer<T>*> buffers_;
};

inline PpnModel<float> build_model(const ModelConfig& cfg) { return PpnModel<float>(cfg); }

// Converts an image to the model's input tensor layout (resizing first when
// needed); pixel values scale to [0,1], normalization happens inside the
// model per backbone convention.
template <typename T = float>
inline void image_to_input(const ImageRGB& img, int input_size, Tensor<T>& batch, int n) {
    const ImageRGB* src = &img;
    ImageRGB resized;
    if (img.width != input_size || img.height != input_size) {
        resized = resize(img, input_size, input_size);
        src = &resized;
    }
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < input_size; ++y)
            for (int x = 0; x < input_size; ++x)
                batch.at(n, c, y, x) = static_cast<T>(src->at(x, y)[c]) / T{255};
}

// ---------------------------------------------------------------------------
// Checkpoint container: a small JSON header describing the config and tensor
// layout, followed by raw float32 payloads.

struct CheckpointMeta {
    int epoch = 0;
    double best_val_f1 = 0.0;
    std::string manifest_hash;
    std::vector<uint64_t> rng_state;
    nlohmann::json extra;  // schedule/optimizer settings the trainer wants back
};

inline constexpr char kCheckpointMagic[8] = {'P', 'P', 'N', 'C', 'K', 'P', 'T', '\n'};

template <typename T>
inline void save_checkpoint(PpnModel<T>& model, const CheckpointMeta& meta, const std::string& path) {
    nlohmann::ordered_json header;
    header["format"] = 1;
    header["config"] = model.config().to_json();
    header["epoch"] = meta.epoch;
    header["best_val_f1"] = meta.best_val_f1;
    header["manifest_hash"] = meta.manifest_hash;
    header["rng_state"] = meta.rng_state;
    header["extra"] = meta.extra;
    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    for (auto* p : model.params()) {
        tensors.push_back({{"name", p->name}, {"kind", "param"}, {"count", p->value.size()}});
        tensors.push_back({{"name", p->name}, {"kind", "momentum"}, {"count", p->momentum.size()}});
    }
    for (auto* b : model.buffers())
        tensors.push_back({{"name", b->name}, {"kind", "buffer"}, {"count", b->value.size()}});
    header["tensors"] = tensors;

    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const uint64_t len = head.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    auto dump = [&](const auto& tensor) {
        std::vector<float> raw(tensor.size());
        for (size_t i = 0; i < tensor.size(); ++i) raw[i] = static_cast<float>(tensor[i]);
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size() * sizeof(float)));
    };
    for (auto* p : model.params()) {
        dump(p->value);
        dump(p->momentum);
    }
    for (auto* b : model.buffers()) dump(b->value);
    if (!out) throw IOError("short write: " + path);
}

template <typename T = float>
inline std::pair<std::unique_ptr<PpnModel<T>>, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResumeError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw ResumeError("not a checkpoint file: " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string head(len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(len));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw ResumeError(std::string("corrupt checkpoint header: ") + e.what());
    }
    if (header.at("format").get<int>() != 1) throw ResumeError("unsupported checkpoint format");

    auto model = std::make_unique<PpnModel<T>>(ModelConfig::from_json(header.at("config")));
    CheckpointMeta meta;
    meta.epoch = header.at("epoch").get<int>();
    meta.best_val_f1 = header.at("best_val_f1").get<double>();
    meta.manifest_hash = header.at("manifest_hash").get<std::string>();
    meta.rng_state = header.at("rng_state").get<std::vector<uint64_t>>();
    meta.extra = header.at("extra");

    auto fill = [&](auto& tensor, const nlohmann::json& desc) {
        if (desc.at("count").get<size_t>() != tensor.size())
            throw ResumeError("tensor size mismatch for " + desc.at("name").get<std::string>());
        std::vector<float> raw(tensor.size());
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size() * sizeof(float)));
        if (!in) throw ResumeError("truncated checkpoint payload");
        for (size_t i = 0; i < tensor.size(); ++i) tensor[i] = static_cast<T>(raw[i]);
    };
    const auto& tensors = header.at("tensors");
    size_t ti = 0;
    for (auto* p : model->params()) {
        fill(p->value, tensors.at(ti++));
        fill(p->momentum, tensors.at(ti++));
    }
    for (auto* b : model->buffers()) fill(b->value, tensors.at(ti++));
    return {std::move(model), meta};
}

}  // namespace ppn

#endif  // PPN_MODEL_HPP_
