"""Tour of the network engine: flat-vector MLPs, exact backprop, Adam.

Networks live in a single flat float64 vector, which is what lets the
evolutionary layer treat a policy as a genome. Here we check the analytic
gradient against central finite differences and then fit a small regression
with Adam.
"""

import numpy as np

from popgrad import AdamState, NetSpec, adam_step, backward, forward, init_params

rng = np.random.default_rng(0)

# 1. a small tanh network and its gradient, checked against finite differences
spec = NetSpec((3, 8, 2), hidden_nonlinearity="tanh", output_nonlinearity="identity")
params = init_params(spec, seed=1)
x = rng.normal(size=3)
upstream = rng.normal(size=2)

grad, input_grad = backward(spec, params, x, upstream)
h = 1e-5
fd = np.zeros_like(params)
for i in range(params.size):
    bump = params.copy()
    bump[i] += h
    up = forward(spec, bump, x) @ upstream
    bump[i] -= 2 * h
    down = forward(spec, bump, x) @ upstream
    fd[i] = (up - down) / (2 * h)
err = np.max(np.abs(grad - fd)) / max(np.max(np.abs(fd)), 1e-12)
print(f"analytic vs finite-difference gradient, max relative error: {err:.2e}")

# 2. fit y = sin(x) on [-2, 2] with Adam
spec = NetSpec((1, 16, 1), output_nonlinearity="identity")
params = init_params(spec, seed=2)
adam = AdamState.zeros(params.size, learning_rate=1e-2)
xs = np.linspace(-2, 2, 64)[:, None]
ys = np.sin(xs)

for step in range(2001):
    pred = forward(spec, params, xs)
    residual = pred - ys
    loss = float(np.mean(residual ** 2))
    grad, _ = backward(spec, params, xs, 2.0 * residual / len(xs))
    adam_step(adam, params, grad)
    if step % 500 == 0:
        print(f"  adam step {step:4d}  mse {loss:.6f}")
print("final fit at x=1.0:", float(forward(spec, params, np.array([1.0]))[0]),
      "vs sin(1.0) =", float(np.sin(1.0)))
