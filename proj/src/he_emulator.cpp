#include "hemlr/he_emulator.hpp"

#include <string>

#include "hemlr/error.hpp"

namespace hemlr {

    void HeParams::validate() const {
        if (log_n < 2 || log_n > 20) {
            throw Error(ErrorKind::InvalidArgument, "logN must lie in [2, 20]");
        }
        if (log_p < 1 || log_q < log_p) {
            throw Error(ErrorKind::InvalidArgument, "need logQ >= logp >= 1 so that max_level >= 1");
        }
    }

    std::string_view to_string(OpKind kind) {
        switch (kind) {
            case OpKind::Enc: return "Enc";
            case OpKind::Dec: return "Dec";
            case OpKind::Add: return "Add";
            case OpKind::Mult: return "Mult";
            case OpKind::CMult: return "cMult";
            case OpKind::ReScale: return "ReScale";
            case OpKind::Rot: return "Rot";
            case OpKind::Bootstrap: return "Bootstrap";
            case OpKind::ModDown: return "ModDown";
        }
        return "?";
    }

    std::uint64_t OpCounts::total() const {
        std::uint64_t t = 0;
        for (auto c : counts) {
            t += c;
        }
        return t;
    }

    OpCounts operator-(const OpCounts &a, const OpCounts &b) {
        OpCounts d;
        for (size_t i = 0; i < d.counts.size(); i++) {
            d.counts[i] = a.counts[i] - b.counts[i];
        }
        return d;
    }

    void OpTrace::note_level(int level, int max_level) {
        const int depth = max_level - level;
        int seen = max_depth_.load();
        while (depth > seen && !max_depth_.compare_exchange_weak(seen, depth)) {
        }
    }

    void OpTrace::note_live_payloads(std::int64_t live) {
        std::int64_t seen = peak_payloads_.load();
        while (live > seen && !peak_payloads_.compare_exchange_weak(seen, live)) {
        }
    }

    OpCounts OpTrace::snapshot() const {
        OpCounts c;
        for (size_t i = 0; i < c.counts.size(); i++) {
            c.counts[i] = counts_[i].load();
        }
        return c;
    }

    Emulator::Emulator(HeParams params)
        : params_(params),
          slots_(0),
          trace_(std::make_shared<OpTrace>()),
          live_(std::make_shared<std::atomic<std::int64_t>>(0)),
          next_id_(std::make_shared<std::atomic<std::uint64_t>>(1)) {
        params_.validate();
        slots_ = params_.slots();
    }

    CiphertextSim Emulator::make(std::vector<double> slots, int level, int scale_bits) const {
        CiphertextSim ct;
        auto live = live_;
        trace_->note_live_payloads(live->fetch_add(1) + 1);
        ct.payload_ = std::shared_ptr<const std::vector<double>>(new std::vector<double>(std::move(slots)),
                                                                 [live](const std::vector<double> *p) {
                                                                     live->fetch_sub(1);
                                                                     delete p;
                                                                 });
        ct.level_ = level;
        ct.scale_bits_ = scale_bits;
        ct.id_ = next_id_->fetch_add(1);
        trace_->note_level(level, params_.max_level());
        return ct;
    }

    void Emulator::require_binary(const CiphertextSim &a, const CiphertextSim &b, std::string_view op) const {
        if (a.level_ != b.level_) {
            throw Error(ErrorKind::LevelMismatch, std::string(op) + " on levels " + std::to_string(a.level_) +
                                                      " and " + std::to_string(b.level_));
        }
    }

    void Emulator::require_level(const CiphertextSim &a, std::string_view op) const {
        if (a.level_ < 1) {
            throw Error(ErrorKind::LevelExhausted, std::string(op) + " needs a level, ciphertext is at level 0");
        }
    }

    CiphertextSim Emulator::enc(std::span<const double> v) const {
        if (v.size() > static_cast<size_t>(slots_)) {
            throw Error(ErrorKind::PayloadTooLarge,
                        std::to_string(v.size()) + " values for " + std::to_string(slots_) + " slots");
        }
        trace_->record(OpKind::Enc);
        std::vector<double> slots(static_cast<size_t>(slots_), 0.0);
        std::copy(v.begin(), v.end(), slots.begin());
        return make(std::move(slots), params_.max_level(), params_.log_p);
    }

    std::vector<double> Emulator::dec(const CiphertextSim &ct) const {
        trace_->record(OpKind::Dec);
        return *ct.payload_;
    }

    CiphertextSim Emulator::add(const CiphertextSim &a, const CiphertextSim &b) const {
        require_binary(a, b, "add");
        if (a.scale_bits_ != b.scale_bits_) {
            throw Error(ErrorKind::ScaleMismatch, "add on scales " + std::to_string(a.scale_bits_) + " and " +
                                                      std::to_string(b.scale_bits_));
        }
        trace_->record(OpKind::Add);
        std::vector<double> out(*a.payload_);
        const auto &bv = *b.payload_;
        for (size_t i = 0; i < out.size(); i++) {
            out[i] += bv[i];
        }
        return make(std::move(out), a.level_, a.scale_bits_);
    }

    CiphertextSim Emulator::sub(const CiphertextSim &a, const CiphertextSim &b) const {
        require_binary(a, b, "sub");
        if (a.scale_bits_ != b.scale_bits_) {
            throw Error(ErrorKind::ScaleMismatch, "sub on scales " + std::to_string(a.scale_bits_) + " and " +
                                                      std::to_string(b.scale_bits_));
        }
        trace_->record(OpKind::Add);
        std::vector<double> out(*a.payload_);
        const auto &bv = *b.payload_;
        for (size_t i = 0; i < out.size(); i++) {
            out[i] -= bv[i];
        }
        return make(std::move(out), a.level_, a.scale_bits_);
    }

    CiphertextSim Emulator::add_const(const CiphertextSim &a, std::span<const double> k) const {
        if (k.size() > static_cast<size_t>(slots_)) {
            throw Error(ErrorKind::PayloadTooLarge, "constant longer than the slot vector");
        }
        trace_->record(OpKind::Add);
        std::vector<double> out(*a.payload_);
        for (size_t i = 0; i < k.size(); i++) {
            out[i] += k[i];
        }
        return make(std::move(out), a.level_, a.scale_bits_);
    }

    CiphertextSim Emulator::mult(const CiphertextSim &a, const CiphertextSim &b) const {
        require_binary(a, b, "mult");
        require_level(a, "mult");
        trace_->record(OpKind::Mult);
        std::vector<double> out(*a.payload_);
        const auto &bv = *b.payload_;
        for (size_t i = 0; i < out.size(); i++) {
            out[i] *= bv[i];
        }
        return make(std::move(out), a.level_, a.scale_bits_ + b.scale_bits_);
    }

    CiphertextSim Emulator::cmult(std::span<const double> k, const CiphertextSim &a) const {
        if (k.size() > static_cast<size_t>(slots_)) {
            throw Error(ErrorKind::PayloadTooLarge, "constant longer than the slot vector");
        }
        require_level(a, "cmult");
        trace_->record(OpKind::CMult);
        std::vector<double> out(*a.payload_);
        for (size_t i = 0; i < out.size(); i++) {
            out[i] *= i < k.size() ? k[i] : 0.0;
        }
        return make(std::move(out), a.level_, a.scale_bits_ + params_.log_p);
    }

    CiphertextSim Emulator::cmult(double k, const CiphertextSim &a) const {
        require_level(a, "cmult");
        trace_->record(OpKind::CMult);
        std::vector<double> out(*a.payload_);
        for (double &v : out) {
            v *= k;
        }
        return make(std::move(out), a.level_, a.scale_bits_ + params_.log_p);
    }

    CiphertextSim Emulator::rescale(const CiphertextSim &a) const {
        if (a.scale_bits_ <= params_.log_p) {
            throw Error(ErrorKind::NothingToRescale, "scale is already at logp");
        }
        require_level(a, "rescale");
        trace_->record(OpKind::ReScale);
        CiphertextSim out = a;
        out.level_ = a.level_ - 1;
        out.scale_bits_ = a.scale_bits_ - params_.log_p;
        out.id_ = next_id_->fetch_add(1);
        trace_->note_level(out.level_, params_.max_level());
        return out;
    }

    CiphertextSim Emulator::rot(const CiphertextSim &a, long long k) const {
        trace_->record(OpKind::Rot);
        const long long n = slots_;
        const long long shift = ((k % n) + n) % n;
        const auto &in = *a.payload_;
        std::vector<double> out(in.size());
        std::copy(in.begin() + shift, in.end(), out.begin());
        std::copy(in.begin(), in.begin() + shift, out.begin() + (n - shift));
        return make(std::move(out), a.level_, a.scale_bits_);
    }

    CiphertextSim Emulator::bootstrap(const CiphertextSim &a) const {
        trace_->record(OpKind::Bootstrap);
        CiphertextSim out = a;
        out.level_ = params_.max_level();
        out.id_ = next_id_->fetch_add(1);
        return out;
    }

    CiphertextSim Emulator::mod_down_to(const CiphertextSim &a, int level) const {
        if (level > a.level_ || level < 0) {
            throw Error(ErrorKind::LevelMismatch, "mod-down can only lower the level");
        }
        trace_->record(OpKind::ModDown);
        if (level == a.level_) {
            return a;
        }
        CiphertextSim out = a;
        out.level_ = level;
        out.id_ = next_id_->fetch_add(1);
        trace_->note_level(level, params_.max_level());
        return out;
    }

    std::pair<CiphertextSim, CiphertextSim> Emulator::level_align(const CiphertextSim &a,
                                                                  const CiphertextSim &b) const {
        const int level = std::min(a.level_, b.level_);
        trace_->record(OpKind::ModDown);
        auto lower = [&](const CiphertextSim &ct) {
            if (ct.level_ == level) {
                return ct;
            }
            CiphertextSim out = ct;
            out.level_ = level;
            out.id_ = next_id_->fetch_add(1);
            trace_->note_level(level, params_.max_level());
            return out;
        };
        return {lower(a), lower(b)};
    }

    CiphertextSim Emulator::restore(std::vector<double> slots, int level, int scale_bits) const {
        if (slots.size() != static_cast<size_t>(slots_)) {
            throw Error(ErrorKind::PayloadTooLarge, "checkpointed payload has the wrong slot count");
        }
        if (level < 0 || level > params_.max_level()) {
            throw Error(ErrorKind::LevelMismatch, "checkpointed level outside [0, max_level]");
        }
        return make(std::move(slots), level, scale_bits);
    }

}  // namespace hemlr
