#include "hemlr/vr_encoding.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <optional>
#include <string>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace {

        int log2_exact(int v) {
            return std::countr_zero(static_cast<unsigned>(v));
        }

        // 0/1 mask over payload rows [r0, r1) x cols [c0, c1) of a single ciphertext.
        std::vector<double> rect_mask(const Emulator &em, const PackedMatrix &p, int r0, int r1, int c0, int c1) {
            std::vector<double> m(static_cast<size_t>(em.slots()), 0.0);
            for (int r = r0; r < r1; r++) {
                for (int c = c0; c < c1; c++) {
                    m[static_cast<size_t>(r * p.padded_cols + c)] = 1.0;
                }
            }
            return m;
        }

        void require_single(const PackedMatrix &p, const char *op) {
            if (p.cts.size() != 1) {
                throw Error(ErrorKind::MultiCiphertextUnsupported,
                            std::string(op) + " needs a single-ciphertext payload, got " + std::to_string(p.cts.size()));
            }
        }

        // ct + rot(ct, step) + rot(ct, 2 step) ... with `count` doublings.
        CiphertextSim rotate_and_add(const Emulator &em, CiphertextSim ct, long long step, int count) {
            for (int k = 0; k < count; k++) {
                ct = em.add(ct, em.rot(ct, step << k));
            }
            return ct;
        }

        CiphertextSim masked(const Emulator &em, const std::vector<double> &mask, const CiphertextSim &ct) {
            return em.rescale(em.cmult(mask, ct));
        }

        CiphertextSim add_aligned(const Emulator &em, const CiphertextSim &a, const CiphertextSim &b) {
            if (a.level() == b.level()) {
                return em.add(a, b);
            }
            auto [x, y] = em.level_align(a, b);
            return em.add(x, y);
        }

        CiphertextSim mult_aligned(const Emulator &em, const CiphertextSim &a, const CiphertextSim &b) {
            if (a.level() == b.level()) {
                return em.mult(a, b);
            }
            auto [x, y] = em.level_align(a, b);
            return em.mult(x, y);
        }

        void accumulate(const Emulator &em, std::optional<CiphertextSim> &acc, const CiphertextSim &term) {
            acc = acc ? add_aligned(em, *acc, term) : term;
        }

        // Sum over pieces of rot(ct, offset) * mask; pieces sharing an offset are merged, and a single
        // piece covering the whole slot vector skips its mask.
        CiphertextSim permute(const Emulator &em, const CiphertextSim &ct,
                              const std::vector<std::pair<long long, std::vector<double>>> &pieces) {
            const long long n = em.slots();
            std::map<long long, std::vector<double>> merged;
            for (const auto &[offset, mask] : pieces) {
                const long long key = ((offset % n) + n) % n;
                auto [it, fresh] = merged.try_emplace(key, mask);
                if (!fresh) {
                    for (size_t i = 0; i < mask.size(); i++) {
                        it->second[i] = std::max(it->second[i], mask[i]);
                    }
                }
            }
            std::optional<CiphertextSim> acc;
            for (const auto &[offset, mask] : merged) {
                if (std::all_of(mask.begin(), mask.end(), [](double v) { return v == 0.0; })) {
                    continue;
                }
                CiphertextSim term = em.rot(ct, offset);
                if (merged.size() > 1 || !std::all_of(mask.begin(), mask.end(), [](double v) { return v == 1.0; })) {
                    term = em.cmult(mask, term);
                }
                acc = acc ? em.add(*acc, term) : term;
            }
            return acc ? *acc : ct;
        }

        PackedMatrix with_single(const PackedMatrix &p, CiphertextSim ct) {
            PackedMatrix out = p;
            out.cts = {std::move(ct)};
            return out;
        }

        void check_geometry(const PackedMatrix &a, const PackedMatrix &b) {
            if (a.padded_cols != b.padded_cols) {
                throw Error(ErrorKind::DimensionMismatch, "operands use different row strides (" +
                                                              std::to_string(a.padded_cols) + " vs " +
                                                              std::to_string(b.padded_cols) + ")");
            }
        }

        int ct_rows(const PackedMatrix &p, size_t ct_index) {
            const int start = static_cast<int>(ct_index) * p.rows_per_ct;
            return std::min(p.rows_per_ct, p.rows - start);
        }

        /* Second operand transposed: a holds A row-major, bt holds B^T row-major. For each payload row j of
         * bt: isolate it, rotate it to row 0, replicate it down every row, multiply with A, sum each row
         * into column 0, move the dot product to column (col_offset + j) and keep it with a mask.
         */
        std::vector<CiphertextSim> replicated_rows(const Emulator &em, const PackedMatrix &bt, size_t ct_index) {
            const int rows = ct_rows(bt, ct_index);
            const int row_steps = log2_exact(bt.rows_per_ct);
            std::vector<CiphertextSim> reps;
            reps.reserve(static_cast<size_t>(rows));
            for (int j = 0; j < rows; j++) {
                CiphertextSim row = masked(em, rect_mask(em, bt, j, j + 1, 0, bt.cols), bt.cts[ct_index]);
                row = em.rot(row, static_cast<long long>(j) * bt.padded_cols);
                reps.push_back(rotate_and_add(em, row, -static_cast<long long>(bt.padded_cols), row_steps));
            }
            return reps;
        }

        void second_transposed_block(const Emulator &em, const PackedMatrix &a, size_t a_index,
                                     const std::vector<CiphertextSim> &reps, int col_offset,
                                     std::optional<CiphertextSim> &acc) {
            const int a_rows = ct_rows(a, a_index);
            const int col_steps = log2_exact(a.padded_cols);
            for (size_t j = 0; j < reps.size(); j++) {
                const int out_col = col_offset + static_cast<int>(j);
                CiphertextSim prod = em.rescale(mult_aligned(em, a.cts[a_index], reps[j]));
                prod = rotate_and_add(em, prod, 1, col_steps);
                if (out_col != 0) {
                    prod = em.rot(prod, -static_cast<long long>(out_col));
                }
                accumulate(em, acc, masked(em, rect_mask(em, a, 0, a_rows, out_col, out_col + 1), prod));
            }
        }

        PackedMatrix matmul_second_transposed(const Emulator &em, const PackedMatrix &a, const PackedMatrix &bt) {
            check_geometry(a, bt);
            if (a.cols != bt.cols) {
                throw Error(ErrorKind::DimensionMismatch, "inner dimensions differ: " + std::to_string(a.cols) +
                                                              " vs " + std::to_string(bt.cols));
            }
            if (bt.rows > a.padded_cols) {
                throw Error(ErrorKind::DimensionMismatch, "product has more columns than the row stride holds");
            }
            std::vector<std::vector<CiphertextSim>> reps;
            for (size_t jb = 0; jb < bt.cts.size(); jb++) {
                reps.push_back(replicated_rows(em, bt, jb));
            }
            PackedMatrix out;
            out.rows = a.rows;
            out.cols = bt.rows;
            out.padded_cols = a.padded_cols;
            out.rows_per_ct = a.rows_per_ct;
            out.transposed = false;
            for (size_t i = 0; i < a.cts.size(); i++) {
                std::optional<CiphertextSim> acc;
                for (size_t jb = 0; jb < bt.cts.size(); jb++) {
                    second_transposed_block(em, a, i, reps[jb], static_cast<int>(jb) * bt.rows_per_ct, acc);
                }
                out.cts.push_back(*acc);
            }
            return out;
        }

        /* First operand transposed: at holds A^T (the n x m payload) and b holds B (n x p), sharing the row
         * tiling. For each payload column k of at: isolate it, rotate it to column 0, replicate it across
         * the row, multiply with B, sum down the columns and keep output row k with a mask.
         */
        PackedMatrix matmul_first_transposed(const Emulator &em, const PackedMatrix &at, const PackedMatrix &b) {
            check_geometry(at, b);
            if (at.rows != b.rows || at.cts.size() != b.cts.size()) {
                throw Error(ErrorKind::DimensionMismatch, "inner dimensions differ: " + std::to_string(at.rows) +
                                                              " vs " + std::to_string(b.rows));
            }
            const int m = at.cols;
            const int col_steps = log2_exact(at.padded_cols);
            const int row_steps = log2_exact(at.rows_per_ct);

            PackedMatrix out;
            out.rows = m;
            out.cols = b.cols;
            out.padded_cols = b.padded_cols;
            out.rows_per_ct = b.rows_per_ct;
            out.transposed = false;
            const size_t out_cts = static_cast<size_t>((m + out.rows_per_ct - 1) / out.rows_per_ct);
            std::vector<std::optional<CiphertextSim>> acc(out_cts);

            for (size_t blk = 0; blk < at.cts.size(); blk++) {
                const int rows = ct_rows(at, blk);
                for (int k = 0; k < m; k++) {
                    CiphertextSim col = masked(em, rect_mask(em, at, 0, rows, k, k + 1), at.cts[blk]);
                    if (k != 0) {
                        col = em.rot(col, k);
                    }
                    col = rotate_and_add(em, col, -1, col_steps);
                    CiphertextSim prod = em.rescale(mult_aligned(em, col, b.cts[blk]));
                    prod = rotate_and_add(em, prod, b.padded_cols, row_steps);
                    const int local = k % out.rows_per_ct;
                    accumulate(em, acc[static_cast<size_t>(k / out.rows_per_ct)],
                               masked(em, rect_mask(em, out, local, local + 1, 0, b.cols), prod));
                }
            }
            for (auto &ct : acc) {
                out.cts.push_back(*ct);
            }
            return out;
        }

    }  // namespace

    int PackedMatrix::level() const {
        int lvl = cts.empty() ? 0 : cts.front().level();
        for (const auto &ct : cts) {
            lvl = std::min(lvl, ct.level());
        }
        return lvl;
    }

    int next_pow2(int v) {
        return v <= 1 ? 1 : static_cast<int>(std::bit_ceil(static_cast<unsigned>(v)));
    }

    PackedMatrix pack(const Emulator &em, const Matrix &m, bool transpose, int width) {
        const Matrix payload = transpose ? Matrix(m.transpose()) : m;
        PackedMatrix p;
        p.rows = static_cast<int>(payload.rows());
        p.cols = static_cast<int>(payload.cols());
        p.transposed = transpose;
        p.padded_cols = next_pow2(std::max(p.cols, width));
        if (width != 0 && width != p.padded_cols) {
            throw Error(ErrorKind::InvalidArgument, "row stride must be a power of two >= the payload width");
        }
        if (p.padded_cols > em.slots()) {
            throw Error(ErrorKind::MatrixTooWide, std::to_string(p.cols) + " columns pad to " +
                                                      std::to_string(p.padded_cols) + " > " +
                                                      std::to_string(em.slots()) + " slots");
        }
        p.rows_per_ct = em.slots() / p.padded_cols;
        const int count = std::max(1, (p.rows + p.rows_per_ct - 1) / p.rows_per_ct);
        for (int c = 0; c < count; c++) {
            std::vector<double> slots(static_cast<size_t>(em.slots()), 0.0);
            for (int r = c * p.rows_per_ct; r < std::min(p.rows, (c + 1) * p.rows_per_ct); r++) {
                const int base = (r % p.rows_per_ct) * p.padded_cols;
                for (int j = 0; j < p.cols; j++) {
                    slots[static_cast<size_t>(base + j)] = payload(r, j);
                }
            }
            p.cts.push_back(em.enc(slots));
        }
        return p;
    }

    Matrix unpack(const Emulator &em, const PackedMatrix &p) {
        Matrix payload(p.rows, p.cols);
        for (size_t c = 0; c < p.cts.size(); c++) {
            const std::vector<double> slots = em.dec(p.cts[c]);
            for (int r = static_cast<int>(c) * p.rows_per_ct;
                 r < std::min(p.rows, static_cast<int>(c + 1) * p.rows_per_ct); r++) {
                const int base = (r % p.rows_per_ct) * p.padded_cols;
                for (int j = 0; j < p.cols; j++) {
                    payload(r, j) = slots[static_cast<size_t>(base + j)];
                }
            }
        }
        return p.transposed ? Matrix(payload.transpose()) : payload;
    }

    PackedMatrix as_transposed(PackedMatrix p) {
        p.transposed = !p.transposed;
        return p;
    }

    PackedMatrix rescale(const Emulator &em, PackedMatrix p) {
        for (auto &ct : p.cts) {
            while (ct.scale_bits() > em.params().log_p) {
                ct = em.rescale(ct);
            }
        }
        return p;
    }

    PackedMatrix row_shift(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "row_shift");
        if (p.rows <= 1) {
            return p;
        }
        const long long pc = p.padded_cols;
        return with_single(p, permute(em, p.cts[0],
                                      {{pc, rect_mask(em, p, 0, p.rows - 1, 0, p.padded_cols)},
                                       {-(p.rows - 1) * pc, rect_mask(em, p, p.rows - 1, p.rows, 0, p.padded_cols)}}));
    }

    PackedMatrix col_shift_incomplete(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "col_shift_incomplete");
        const long long pc = p.padded_cols;
        const int last = p.cols - 1;
        std::vector<std::pair<long long, std::vector<double>>> pieces;
        pieces.emplace_back(1, rect_mask(em, p, 0, p.rows, 0, last));
        pieces.emplace_back(pc - last, rect_mask(em, p, 0, p.rows - 1, last, p.cols));
        pieces.emplace_back(-((p.rows - 1) * pc + last), rect_mask(em, p, p.rows - 1, p.rows, last, p.cols));
        if (p.rows == p.rows_per_ct && p.cols == p.padded_cols) {
            // Whole slot vector: a single rotation by one.
            pieces = {{1, std::vector<double>(static_cast<size_t>(em.slots()), 1.0)}};
        }
        return with_single(p, permute(em, p.cts[0], pieces));
    }

    PackedMatrix col_shift_complete(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "col_shift_complete");
        const int last = p.cols - 1;
        const CiphertextSim body = em.cmult(rect_mask(em, p, 0, p.rows, 0, last), em.rot(p.cts[0], 1));
        const CiphertextSim wrap = em.cmult(rect_mask(em, p, 0, p.rows, last, p.cols), em.rot(p.cts[0], -last));
        return with_single(p, em.add(body, wrap));
    }

    PackedMatrix sum_row_vec(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "sum_row_vec");
        const CiphertextSim sums = rotate_and_add(em, p.cts[0], 1, log2_exact(p.padded_cols));
        return with_single(p, masked(em, rect_mask(em, p, 0, p.rows, 0, 1), sums));
    }

    PackedMatrix sum_col_vec(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "sum_col_vec");
        CiphertextSim sums = rotate_and_add(em, p.cts[0], p.padded_cols, log2_exact(p.rows_per_ct));
        if (p.rows < p.rows_per_ct) {
            sums = masked(em, rect_mask(em, p, 0, p.rows, 0, p.cols), sums);
        }
        return with_single(p, sums);
    }

    PackedMatrix replicate_cols(const Emulator &em, const PackedMatrix &p) {
        require_single(p, "replicate_cols");
        CiphertextSim first = masked(em, rect_mask(em, p, 0, p.rows, 0, 1), p.cts[0]);
        first = rotate_and_add(em, first, -1, log2_exact(p.padded_cols));
        if (p.cols < p.padded_cols) {
            first = masked(em, rect_mask(em, p, 0, p.rows, 0, p.cols), first);
        }
        return with_single(p, first);
    }

    TransposedSide transposed_side(const PackedMatrix &a, const PackedMatrix &b) {
        if (a.transposed == b.transposed) {
            throw Error(ErrorKind::BothOrNeitherTransposed,
                        a.transposed ? "both operands hold transposes" : "neither operand holds a transpose");
        }
        return a.transposed ? TransposedSide::First : TransposedSide::Second;
    }

    PackedMatrix vr_matmul(const Emulator &em, const PackedMatrix &a, const PackedMatrix &b) {
        require_single(a, "vr_matmul");
        require_single(b, "vr_matmul");
        return dvr_matmul(em, a, b);
    }

    PackedMatrix dvr_matmul(const Emulator &em, const PackedMatrix &a, const PackedMatrix &b) {
        if (a.cts.empty() || b.cts.empty() || a.rows == 0 || b.rows == 0) {
            throw Error(ErrorKind::DimensionMismatch, "empty operand team");
        }
        if (a.logical_cols() != b.logical_rows()) {
            throw Error(ErrorKind::DimensionMismatch, "cannot multiply " + std::to_string(a.logical_rows()) + "x" +
                                                          std::to_string(a.logical_cols()) + " by " +
                                                          std::to_string(b.logical_rows()) + "x" +
                                                          std::to_string(b.logical_cols()));
        }
        return transposed_side(a, b) == TransposedSide::Second ? matmul_second_transposed(em, a, b)
                                                               : matmul_first_transposed(em, a, b);
    }

}  // namespace hemlr
