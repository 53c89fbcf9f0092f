#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rulforge/tensor.hpp"

namespace rulforge {

enum class Activation : std::uint8_t { tanh, relu, leaky_relu };
enum class Padding : std::uint8_t { valid, same };

inline constexpr double kLeakyReluSlope = 0.01;

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);
std::string_view to_string(Padding p);
Padding padding_from_string(std::string_view name);

/// Output extent along one axis of a dilated convolution.
/// valid: in - d*(k-1); same: in.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t dilation, Padding pad);

/// Dilated 2-D convolution, stride 1.
///   S[i,j,f] = b[f] + sum_{a,b,c} I[i + d*a - p_r, j + d*b - p_c, c] * K[a,b,c,f]
/// input H x W x C, kernels n x m x C x F, bias F. Out-of-range input rows
/// and columns read as zero (only reachable with same padding).
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t dilation,
              Padding pad = Padding::valid);
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t dilation,
              Padding pad = Padding::valid);

/// Accumulates gradients of a conv2d call given the output gradient.
/// d_input may be null when the input gradient is not needed.
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& d_output,
                     std::size_t dilation, Padding pad, Tensor* d_input, Tensor& d_kernels,
                     Tensor& d_bias);

/// Non-overlapping max pooling over H x W x C; remainder rows/columns are
/// dropped. `argmax` receives the flat input index chosen for every output.
Tensor maxpool2d(const Tensor& input, std::size_t pool_rows, std::size_t pool_cols,
                 std::vector<std::size_t>* argmax = nullptr);
void maxpool2d_backward(const Tensor& d_output, const std::vector<std::size_t>& argmax,
                        Tensor& d_input);

/// y = W x + b with W stored out x in.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output,
                    Tensor* d_input, Tensor& d_weights, Tensor& d_bias);

double activate(Activation fn, double x);
/// Derivative expressed through the pre-activation value.
double activate_grad(Activation fn, double x);
Tensor activation(const Tensor& x, Activation fn);

}  // namespace rulforge
