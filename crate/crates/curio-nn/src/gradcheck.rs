use crate::error::Result;
use crate::network::Network;
use crate::tensor::Tensor;

/// Relative error with an absolute floor, as used by the gradient checks:
/// |a - b| / max(|a|, |b|, 1e-8).
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn perturb(net: &mut Network, layer: usize, bias: bool, idx: usize, delta: f64) {
    let p = &mut net.params_mut()[layer];
    if bias {
        p.bias.data[idx] += delta;
    } else {
        p.weight.data[idx] += delta;
    }
}

fn objective(net: &Network, input: &Tensor) -> Result<f64> {
    let y = net.eval(input)?;
    Ok(0.5 * y.data.iter().map(|v| v * v).sum::<f64>())
}

/// Central finite-difference check of the analytic backward pass.
///
/// Uses the scalar objective J = 0.5 * sum(output^2) and returns the maximum
/// relative error over every parameter entry and every input entry.
pub fn finite_diff_check(net: &Network, input: &Tensor, epsilon: f64) -> Result<f64> {
    assert!(epsilon > 0.0, "epsilon must be positive");

    let (output, trace) = net.forward(input)?;
    // dJ/dy = y for J = 0.5 * sum(y^2)
    let (grads, grad_input) = net.backward(&trace, &output)?;

    let mut work = net.clone();
    let mut max_err: f64 = 0.0;

    for li in 0..net.params().len() {
        for bias in [false, true] {
            let len = if bias {
                net.params()[li].bias.len()
            } else {
                net.params()[li].weight.len()
            };
            for idx in 0..len {
                let analytic = if bias {
                    grads.layers[li].bias.data[idx]
                } else {
                    grads.layers[li].weight.data[idx]
                };
                perturb(&mut work, li, bias, idx, epsilon);
                let plus = objective(&work, input)?;
                perturb(&mut work, li, bias, idx, -2.0 * epsilon);
                let minus = objective(&work, input)?;
                perturb(&mut work, li, bias, idx, epsilon);
                let cd = (plus - minus) / (2.0 * epsilon);
                max_err = max_err.max(relative_error(analytic, cd));
            }
        }
    }

    let mut x = input.clone();
    for idx in 0..x.len() {
        let orig = x.data[idx];
        x.data[idx] = orig + epsilon;
        let plus = objective(&work, &x)?;
        x.data[idx] = orig - epsilon;
        let minus = objective(&work, &x)?;
        x.data[idx] = orig;
        let cd = (plus - minus) / (2.0 * epsilon);
        max_err = max_err.max(relative_error(grad_input.data[idx], cd));
    }

    Ok(max_err)
}
