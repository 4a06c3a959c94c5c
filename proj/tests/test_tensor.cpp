#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gcsep/ops.hpp"
#include "gcsep/tensor.hpp"
#include "test_util.hpp"

using namespace gcsep;

TEST_CASE("matmul identity and hand cases") {
  Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor r = matmul(eye, a);
  CHECK(r.data() == std::vector<double>{1, 2, 3, 4});

  Tensor row = Tensor::from_data({1, 2}, {1, 2});
  Tensor col = Tensor::from_data({2, 1}, {3, 4});
  CHECK(matmul(row, col).item() == doctest::Approx(11.0));
}

TEST_CASE("matmul backward: d sum(a*b) / da = b^T") {
  Tensor a = Tensor::from_data({1, 2}, {1, 2}, true);
  Tensor b = Tensor::from_data({2, 1}, {3, 4}, true);
  sum(matmul(a, b)).backward();
  CHECK(a.grad() == std::vector<double>{3, 4});
  CHECK(b.grad() == std::vector<double>{1, 2});
}

TEST_CASE("scalar loss gradient seeds to one") {
  Tensor x = Tensor::scalar(7.0, true);
  x.backward();
  CHECK(x.grad() == std::vector<double>{1.0});
}

TEST_CASE("backward of sum(x*x)") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  sum(mul(x, x)).backward();
  CHECK(x.grad() == std::vector<double>{2, 4});
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  CHECK_THROWS_AS(mul(x, x).backward(), std::invalid_argument);
}

TEST_CASE("repeated backward accumulates until zero_grad") {
  Tensor x = Tensor::scalar(3.0, true);
  Tensor loss = mul(x, x);
  loss.backward();
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(12.0));
  x.zero_grad();
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("elementwise forward values") {
  Tensor t = Tensor::from_data({3}, {-1, 0, 2});
  CHECK(relu(t).data() == std::vector<double>{0, 0, 2});
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5));
  CHECK(tanh_op(Tensor::scalar(0.0)).item() == doctest::Approx(0.0));
}

TEST_CASE("reductions and shape ops") {
  Tensor t = Tensor::from_data({3}, {1, 2, 3});
  CHECK(sum(t).item() == doctest::Approx(6.0));
  CHECK(mean(t).item() == doctest::Approx(2.0));

  Tensor joined = concat({Tensor::from_data({2}, {1, 2}), Tensor::from_data({1}, {3})}, 0);
  CHECK(joined.data() == std::vector<double>{1, 2, 3});

  Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(transpose(transpose(m)).data() == m.data());
  CHECK_THROWS(sum(m, 5));
}

TEST_CASE("concat of a slice partition reassembles the tensor") {
  testutil::Rng rng(101);
  for (int it = 0; it < 20; ++it) {
    const std::size_t d0 = 1 + rng.index(4), d1 = 2 + rng.index(5);
    Tensor t = testutil::random_tensor({d0, d1}, rng, false);
    const std::size_t cut = 1 + rng.index(d1 - 1);
    Tensor back = concat({slice(t, 1, 0, cut), slice(t, 1, cut, d1 - cut)}, 1);
    CHECK(back.shape() == t.shape());
    CHECK(back.data() == t.data());
  }
}

TEST_CASE("broadcast add/mul over leading dimensions") {
  Tensor big = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor small = Tensor::from_data({3}, {10, 20, 30});
  CHECK(add(big, small).data() == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK_THROWS(add(big, Tensor::from_data({2}, {1, 2})));
}

TEST_CASE("broadcast backward reduces into the smaller operand") {
  Tensor big = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
  Tensor small = Tensor::from_data({2}, {5, 6}, true);
  sum(mul(big, small)).backward();
  CHECK(small.grad() == std::vector<double>{4, 6});  // 1+3, 2+4
  CHECK(big.grad() == std::vector<double>{5, 6, 5, 6});
}

TEST_CASE("finite differences across the op set") {
  testutil::Rng rng(2024);

  SUBCASE("matmul chain") {
    Tensor a = testutil::random_tensor({3, 4}, rng, true);
    Tensor b = testutil::random_tensor({4, 2}, rng, true);
    auto loss = [&] { return sum(mul(matmul(a, b), matmul(a, b))); };
    CHECK(testutil::max_grad_rel_err({a, b}, loss) < 1e-4);
  }

  SUBCASE("elementwise and reductions") {
    Tensor x = testutil::random_tensor({2, 5}, rng, true);
    Tensor y = testutil::random_tensor({5}, rng, true);
    auto loss = [&] {
      Tensor z = add(mul(sigmoid(x), tanh_op(y)), relu(sub(x, y)));
      return add(sum(mean(z, 1)), mean(sum(scale(neg(z), 0.5), 0)));
    };
    CHECK(testutil::max_grad_rel_err({x, y}, loss) < 1e-4);
  }

  SUBCASE("shape movement") {
    Tensor x = testutil::random_tensor({2, 3, 4}, rng, true);
    auto loss = [&] {
      Tensor p = permute(x, {2, 0, 1});
      Tensor r = reshape(p, {4, 6});
      Tensor f = flip(slice(r, 0, 1, 3), 1);
      return sum(mul(f, f));
    };
    CHECK(testutil::max_grad_rel_err({x}, loss) < 1e-4);
  }

  SUBCASE("log") {
    Tensor x = testutil::random_tensor({6}, rng, true, 0.5, 2.0);
    auto loss = [&] { return sum(log_op(x)); };
    CHECK(testutil::max_grad_rel_err({x}, loss) < 1e-4);
  }

  SUBCASE("conv1d and transpose") {
    Tensor in = testutil::random_tensor({2, 11}, rng, true);
    Tensor k = testutil::random_tensor({3, 2, 4}, rng, true);
    Tensor kt = testutil::random_tensor({3, 2, 4}, rng, true);
    auto loss = [&] {
      Tensor mid = conv1d(in, k, 2);
      Tensor out = conv1d_transpose(mid, kt, 2);
      return sum(mul(out, out));
    };
    CHECK(testutil::max_grad_rel_err({in, k, kt}, loss) < 1e-4);
  }

  SUBCASE("layer_norm") {
    Tensor x = testutil::random_tensor({3, 5}, rng, true);
    Tensor g = testutil::random_tensor({5}, rng, true, 0.5, 1.5);
    Tensor b = testutil::random_tensor({5}, rng, true);
    auto loss = [&] { return sum(mul(layer_norm(x, g, b, 1e-8), x)); };
    CHECK(testutil::max_grad_rel_err({x, g, b}, loss) < 1e-4);
  }

  SUBCASE("segment and overlap_add") {
    Tensor x = testutil::random_tensor({2, 9}, rng, true);
    auto loss = [&] {
      Tensor blocks = segment_frames(x, 3);
      Tensor y = overlap_add(mul(blocks, blocks), 3, 9);
      return sum(y);
    };
    CHECK(testutil::max_grad_rel_err({x}, loss) < 1e-4);
  }
}

TEST_CASE("forward determinism") {
  testutil::Rng rng(7);
  Tensor a = testutil::random_tensor({4, 4}, rng, false);
  Tensor b = testutil::random_tensor({4, 4}, rng, false);
  Tensor r1 = sigmoid(matmul(a, b));
  Tensor r2 = sigmoid(matmul(a, b));
  CHECK(r1.data() == r2.data());
}
