#pragma once

#include <vector>

#include "hemlr/he_emulator.hpp"
#include "hemlr/linalg.hpp"

namespace hemlr {

    /* A matrix packed row by row into one or more ciphertexts.
     *
     * The payload is rows x cols; payload row r lives in ciphertext r / rows_per_ct starting at slot
     * (r % rows_per_ct) * padded_cols. padded_cols is a power of two >= cols and
     * padded_cols * rows_per_ct == slots. When `transposed` is set the logical matrix is the payload's
     * transpose, which is how one operand of a Volley Revolver product is supplied.
     */
    struct PackedMatrix {
        int rows = 0;
        int cols = 0;
        int padded_cols = 1;
        int rows_per_ct = 1;
        bool transposed = false;
        std::vector<CiphertextSim> cts;

        int logical_rows() const {
            return transposed ? cols : rows;
        }
        int logical_cols() const {
            return transposed ? rows : cols;
        }
        // Lowest level across the team.
        int level() const;
    };

    int next_pow2(int v);

    // Packs m (or its transpose when `transpose` is set, keeping m as the logical matrix). `width` forces a
    // wider row stride; 0 picks the next power of two above the payload width.
    PackedMatrix pack(const Emulator &em, const Matrix &m, bool transpose = false, int width = 0);
    // Returns the logical matrix.
    Matrix unpack(const Emulator &em, const PackedMatrix &p);

    // Same payload read as its transpose.
    PackedMatrix as_transposed(PackedMatrix p);

    // Rescales every ciphertext that carries a pending scale.
    PackedMatrix rescale(const Emulator &em, PackedMatrix p);

    /* Shift primitives on a single-ciphertext payload. Mask multiplications in these leave the rescale to
     * the caller, so the traced op counts are exactly those of the rotate / mask / add schedule.
     */

    // Payload rows rolled up by one (row 0 moves to the bottom). One Rot when the payload fills the
    // ciphertext.
    PackedMatrix row_shift(const Emulator &em, const PackedMatrix &p);
    // The row-major payload shifted left by one element: element (i, cols-1) receives (i+1, 0) and the last
    // element receives (0, 0). One Rot when rows and columns fill the ciphertext.
    PackedMatrix col_shift_incomplete(const Emulator &em, const PackedMatrix &p);
    // Every row rolled left by one. Always two Rot, two cMult and one Add.
    PackedMatrix col_shift_complete(const Emulator &em, const PackedMatrix &p);

    // Row sums in column 0 of each row, other slots zero: log2(padded_cols) rotate-and-add steps then a
    // column mask.
    PackedMatrix sum_row_vec(const Emulator &em, const PackedMatrix &p);
    // Column sums broadcast to every row: log2(rows_per_ct) rotate-and-add steps, masked when the payload
    // does not fill the ciphertext.
    PackedMatrix sum_col_vec(const Emulator &em, const PackedMatrix &p);
    // Copies column 0 of every row across the row's cols.
    PackedMatrix replicate_cols(const Emulator &em, const PackedMatrix &p);

    enum class TransposedSide { First, Second };

    // Which operand carries the transpose; throws BothOrNeitherTransposed unless exactly one does.
    TransposedSide transposed_side(const PackedMatrix &a, const PackedMatrix &b);

    // Volley Revolver product of two single-ciphertext operands, either operand holding its transpose.
    // Consumes three levels.
    PackedMatrix vr_matmul(const Emulator &em, const PackedMatrix &a, const PackedMatrix &b);

    /* Double Volley Revolver: both operands are teams of ciphertexts. With the second operand transposed
     * the output keeps the first operand's row tiling; with the first transposed the blocks pair up along
     * the shared row tiling and are summed.
     */
    PackedMatrix dvr_matmul(const Emulator &em, const PackedMatrix &a, const PackedMatrix &b);

}  // namespace hemlr
