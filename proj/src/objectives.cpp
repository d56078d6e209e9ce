#include "embedlab/objectives.hpp"

#include <cmath>

#include "embedlab/errors.hpp"

namespace embedlab {

InfoNceResult infonce_loss(const ContrastiveBatch& batch) {
    if (batch.tau <= 0.0)
        throw RangeError("tau must be positive");
    const auto n = batch.u.rows();
    if (n == 0)
        throw DataError("empty batch");
    if (batch.v.rows() != n || batch.v.cols() != batch.u.cols())
        throw ShapeError("u and v shapes differ");

    const double inv_tau = 1.0 / batch.tau;
    const MatrixXdRM s = (batch.u * batch.v.transpose()) * inv_tau;  // s_ij = u_i.v_j/tau

    // row softmax (image -> text) and column softmax (text -> image)
    MatrixXdRM p(n, n), q(n, n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = s.row(i).maxCoeff();
        const Eigen::RowVectorXd ex = (s.row(i).array() - mx).exp();
        const double z = ex.sum();
        p.row(i) = ex / z;
        loss -= s(i, i) - (mx + std::log(z));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mx = s.col(j).maxCoeff();
        const Eigen::VectorXd ex = (s.col(j).array() - mx).exp();
        const double z = ex.sum();
        q.col(j) = ex / z;
        loss -= s(j, j) - (mx + std::log(z));
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;

    // dL/dS = (1/N) [(P - I) + (Q - I)]
    MatrixXdRM ds = p + q;
    ds.diagonal().array() -= 2.0;
    ds *= inv_n;

    InfoNceResult out;
    out.loss = loss;
    out.grad_u = (ds * batch.v) * inv_tau;
    out.grad_v = (ds.transpose() * batch.u) * inv_tau;
    return out;
}

namespace {

// accumulates sum of D(student_i, teacher_i) and d/d student
double cosine_distance_block(const MatrixXdRM& student, const MatrixXdRM& teacher,
                             MatrixXdRM& grad, const char* which) {
    if (student.rows() != teacher.rows() || student.cols() != teacher.cols())
        throw ShapeError(std::string(which) + ": student/teacher shape mismatch");
    grad.resize(student.rows(), student.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < student.rows(); ++i) {
        const auto a = student.row(i);
        const auto b = teacher.row(i);
        const double na = a.norm();
        const double nb = b.norm();
        if (na < 1e-12 || nb < 1e-12)
            throw DegenerateRow(std::string(which) + " patch " + std::to_string(i) +
                                " has near-zero norm");
        const double cos_ab = a.dot(b) / (na * nb);
        loss += 1.0 - cos_ab;
        // d/da (1 - a.b/(|a||b|)) = -b/(|a||b|) + cos * a/|a|^2
        grad.row(i) = -b / (na * nb) + (cos_ab / (na * na)) * a;
    }
    return loss;
}

}  // namespace

MimResult mim_loss(const MaskedBatch& batch) {
    if (batch.student_visible.rows() + batch.student_masked.rows() == 0)
        throw DataError("batch has no patches");
    MimResult out;
    out.loss = 0.0;
    if (batch.student_visible.rows() > 0)
        out.loss += cosine_distance_block(batch.student_visible, batch.teacher_visible,
                                          out.grad_visible, "visible");
    else
        out.grad_visible.resize(0, batch.student_masked.cols());
    if (batch.student_masked.rows() > 0)
        out.loss += cosine_distance_block(batch.student_masked, batch.teacher_masked,
                                          out.grad_masked, "masked");
    else
        out.grad_masked.resize(0, batch.student_visible.cols());
    return out;
}

}  // namespace embedlab
