#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace hemlr {

    /* Leveled-HE parameter set. Only the bookkeeping is modelled: slots = 2^(logN - 1) and one level is
     * consumed per rescale, so a fresh ciphertext can absorb floor(logQ / logp) rescales.
     */
    struct HeParams {
        int log_n = 16;
        int log_q = 990;
        int log_p = 45;
        int security_bits = 128;  // metadata only

        int slots() const {
            return 1 << (log_n - 1);
        }
        int max_level() const {
            return log_q / log_p;
        }
        void validate() const;

        static HeParams default_preset() {
            return {};
        }
    };

    enum class OpKind : int { Enc, Dec, Add, Mult, CMult, ReScale, Rot, Bootstrap, ModDown };
    inline constexpr int kOpKindCount = 9;

    std::string_view to_string(OpKind kind);

    struct OpCounts {
        std::array<std::uint64_t, kOpKindCount> counts{};

        std::uint64_t operator[](OpKind kind) const {
            return counts[static_cast<size_t>(kind)];
        }
        std::uint64_t &operator[](OpKind kind) {
            return counts[static_cast<size_t>(kind)];
        }
        std::uint64_t total() const;
        friend OpCounts operator-(const OpCounts &a, const OpCounts &b);
        friend bool operator==(const OpCounts &, const OpCounts &) = default;
    };

    // Shared, thread-safe op counters.
    class OpTrace {
    public:
        void record(OpKind kind) {
            counts_[static_cast<size_t>(kind)].fetch_add(1, std::memory_order_relaxed);
        }
        void note_level(int level, int max_level);
        void note_live_payloads(std::int64_t live);

        OpCounts snapshot() const;
        // Largest number of levels any ciphertext has consumed since its last refresh.
        int max_depth() const {
            return max_depth_.load();
        }
        std::int64_t peak_payloads() const {
            return peak_payloads_.load();
        }

    private:
        std::array<std::atomic<std::uint64_t>, kOpKindCount> counts_{};
        std::atomic<int> max_depth_{0};
        std::atomic<std::int64_t> peak_payloads_{0};
    };

    /* One emulated ciphertext: the plaintext slot vector plus level and scale bookkeeping. Values are
     * immutable; every operation returns a new ciphertext and copies share the payload.
     */
    class CiphertextSim {
    public:
        std::span<const double> slots() const {
            return *payload_;
        }
        int level() const {
            return level_;
        }
        int scale_bits() const {
            return scale_bits_;
        }
        std::uint64_t id() const {
            return id_;
        }

    private:
        friend class Emulator;
        std::shared_ptr<const std::vector<double>> payload_;
        int level_ = 0;
        int scale_bits_ = 0;
        std::uint64_t id_ = 0;
    };

    class Emulator {
    public:
        explicit Emulator(HeParams params = HeParams::default_preset());

        const HeParams &params() const {
            return params_;
        }
        int slots() const {
            return slots_;
        }
        OpTrace &trace() const {
            return *trace_;
        }
        std::int64_t live_payloads() const {
            return live_->load();
        }

        // Zero-pads v to the slot count. Fresh ciphertexts sit at max_level with scale logp.
        CiphertextSim enc(std::span<const double> v) const;
        std::vector<double> dec(const CiphertextSim &ct) const;

        CiphertextSim add(const CiphertextSim &a, const CiphertextSim &b) const;
        CiphertextSim sub(const CiphertextSim &a, const CiphertextSim &b) const;
        // Adds a plaintext vector (zero-padded) encoded at a's scale. Traced as Add.
        CiphertextSim add_const(const CiphertextSim &a, std::span<const double> k) const;
        CiphertextSim mult(const CiphertextSim &a, const CiphertextSim &b) const;
        CiphertextSim cmult(std::span<const double> k, const CiphertextSim &a) const;
        CiphertextSim cmult(double k, const CiphertextSim &a) const;
        CiphertextSim rescale(const CiphertextSim &a) const;
        // Cyclic left shift by k (reduced mod slots; negative k shifts right).
        CiphertextSim rot(const CiphertextSim &a, long long k) const;
        CiphertextSim bootstrap(const CiphertextSim &a) const;
        CiphertextSim mod_down_to(const CiphertextSim &a, int level) const;
        std::pair<CiphertextSim, CiphertextSim> level_align(const CiphertextSim &a, const CiphertextSim &b) const;

        // Rebuilds a ciphertext from checkpointed state. Not traced.
        CiphertextSim restore(std::vector<double> slots, int level, int scale_bits) const;

    private:
        CiphertextSim make(std::vector<double> slots, int level, int scale_bits) const;
        void require_binary(const CiphertextSim &a, const CiphertextSim &b, std::string_view op) const;
        void require_level(const CiphertextSim &a, std::string_view op) const;

        HeParams params_;
        int slots_;
        std::shared_ptr<OpTrace> trace_;
        std::shared_ptr<std::atomic<std::int64_t>> live_;
        std::shared_ptr<std::atomic<std::uint64_t>> next_id_;
    };

}  // namespace hemlr
