#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "npi/benchmarks.hpp"
#include "npi/riccati.hpp"

using namespace npi;

namespace {

using Mat = Eigen::MatrixXd;

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

// Stabilizing ARE solution from the stable invariant subspace of the Hamiltonian.
Mat are_oracle(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  const Eigen::Index n = A.rows();
  Mat H(2 * n, 2 * n);
  H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
  Eigen::ComplexEigenSolver<Mat> es(H);
  Eigen::MatrixXcd V(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    if (es.eigenvalues()(i).real() < 0) V.col(k++) = es.eigenvectors().col(i);
  EXPECT_EQ(k, n);
  Eigen::MatrixXcd P = V.bottomRows(n) * V.topRows(n).inverse();
  Mat Pr = P.real();
  return 0.5 * (Pr + Pr.transpose());
}

double are_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  return (A.transpose() * P + P * A - P * B * R.inverse() * B.transpose() * P + Q).norm();
}

struct RandomSystem {
  Mat A, B, Q, R;
};

RandomSystem random_stable(std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::uniform_int_distribution<int> dim(1, 5);
  const int n = dim(rng), m = 1 + dim(rng) % n;
  auto rnd = [&](int r, int c) {
    Mat M(r, c);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = d(rng);
    return M;
  };
  Mat L = rnd(n, n), Lq = rnd(n, n), Lr = rnd(m, m);
  return {-L * L.transpose() - Mat::Identity(n, n), rnd(n, m), Lq * Lq.transpose() + 0.1 * Mat::Identity(n, n),
          Lr * Lr.transpose() + Mat::Identity(m, m)};
}

}  // namespace

TEST(Lyapunov, Examples) {
  EXPECT_NEAR(lyapunov_solve({scalar(-1), scalar(1)})(0, 0), 0.5, 1e-15);
  EXPECT_TRUE(lyapunov_solve({-Mat::Identity(2, 2), Mat::Identity(2, 2)}).isApprox(0.5 * Mat::Identity(2, 2), 1e-15));
  Mat A(2, 2), P(2, 2);
  A << 0, 1, -1, -1;
  P << 1.5, 0.5, 0.5, 1.0;
  Mat got = lyapunov_solve({A, Mat::Identity(2, 2)});
  EXPECT_LE((got - P).norm(), 1e-13);
  EXPECT_LE((got * A + A.transpose() * got + Mat::Identity(2, 2)).norm(), 1e-13);
}

TEST(Lyapunov, ResonantSpectrumIsReported) {
  Mat A(2, 2);
  A << 1, 0, 0, -1;
  EXPECT_THROW(lyapunov_solve({A, Mat::Identity(2, 2)}), RiccatiError);
}

TEST(Lyapunov, RandomStableResidual) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 6;
    Mat L(n, n), C(n, n);
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = d(rng), C.data()[i] = d(rng);
    Mat A = -L * L.transpose() - Mat::Identity(n, n);
    Mat M = C * C.transpose();
    Mat P = lyapunov_solve({A, M});
    EXPECT_LE((P * A + A.transpose() * P + M).norm(), 1e-10 * (P.norm() * A.norm() + M.norm()));
    EXPECT_TRUE(P.isApprox(P.transpose(), 0.0));
  }
}

TEST(GainUpdate, Examples) {
  EXPECT_EQ(gain_update(scalar(1), scalar(1), scalar(1))(0, 0), -1.0);
  EXPECT_TRUE(gain_update(Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2)).isZero(0.0));
  EXPECT_TRUE(gain_update(0.5 * Mat::Identity(2, 2), Mat::Identity(2, 2), 2 * Mat::Identity(2, 2))
                  .isApprox(-0.25 * Mat::Identity(2, 2), 1e-15));
}

TEST(Hurwitz, Examples) {
  EXPECT_TRUE(is_hurwitz(scalar(-1)));
  EXPECT_FALSE(is_hurwitz(scalar(1)));
  Mat A(2, 2);
  A << 0, 1, 19.6, -4;
  EXPECT_FALSE(is_hurwitz(A));
  A << 0, 1, -19.6, -4;
  EXPECT_TRUE(is_hurwitz(A));
}

TEST(Kleinman, ScalarFixedPoint) {
  KleinmanResult r = kleinman(scalar(0), scalar(1), scalar(1), scalar(1), scalar(-1));
  EXPECT_NEAR(r.P(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.K(0, 0), -1.0, 1e-15);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Kleinman, UncontrolledStableSystem) {
  KleinmanResult r = kleinman(scalar(-1), scalar(0), scalar(3), scalar(1), scalar(0));
  EXPECT_NEAR(r.P(0, 0), 1.5, 1e-15);
  EXPECT_EQ(r.K(0, 0), 0.0);
}

TEST(Kleinman, NonHurwitzStartIsRejected) {
  EXPECT_THROW(kleinman(scalar(1), scalar(1), scalar(1), scalar(1), scalar(0)), RiccatiError);
}

TEST(Kleinman, PendulumMatchesHamiltonianOracle) {
  Linearization lin = linearize(make_pendulum().system);
  Mat R = scalar(2);
  Mat K0 = stabilizing_gain(lin.A, lin.B);
  ASSERT_TRUE(is_hurwitz(lin.A + lin.B * K0));
  KleinmanResult r = kleinman(lin.A, lin.B, lin.Qhat, R, K0);
  Mat P = are_oracle(lin.A, lin.B, lin.Qhat, R);
  EXPECT_LE((r.K - gain_update(P, lin.B, R)).norm(), 1e-8);
  EXPECT_LE(are_residual(lin.A, lin.B, lin.Qhat, R, r.P), 1e-8);
  EXPECT_GE(r.min_decrease_eig, -1e-10);
}

TEST(Kleinman, RandomStableSystemsMatchOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    RandomSystem s = random_stable(rng);
    KleinmanResult r = kleinman(s.A, s.B, s.Q, s.R, Mat::Zero(s.B.cols(), s.A.rows()));
    Mat P = are_oracle(s.A, s.B, s.Q, s.R);
    EXPECT_LE((r.K - gain_update(P, s.B, s.R)).norm(), 1e-8) << "system " << t;
    EXPECT_LE(are_residual(s.A, s.B, s.Q, s.R, r.P), 1e-8 * std::max(1.0, r.P.norm())) << "system " << t;
    EXPECT_GE(r.min_decrease_eig, -1e-10) << "system " << t;
  }
}

TEST(Kleinman, GainInvariantUnderCostScaling) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    RandomSystem s = random_stable(rng);
    Mat K0 = Mat::Zero(s.B.cols(), s.A.rows());
    Mat K = kleinman(s.A, s.B, s.Q, s.R, K0).K;
    for (double c : {0.1, 10.0}) EXPECT_LE((kleinman(s.A, s.B, c * s.Q, c * s.R, K0).K - K).norm(), 1e-10);
  }
}

TEST(StabilizingGain, ProducesHurwitzClosedLoop) {
  Linearization lor = linearize(make_lorenz().system);
  EXPECT_TRUE(is_hurwitz(lor.A + lor.B * stabilizing_gain(lor.A, lor.B)));
  EXPECT_THROW(stabilizing_gain(scalar(1), scalar(0)), RiccatiError);
}
