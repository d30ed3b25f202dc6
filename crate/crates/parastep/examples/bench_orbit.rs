use parastep::*;
use std::time::Instant;
fn mu_ex3() -> MeasureSpec {
    MeasureSpec::new(vec![Component::Train(AtomTrain::new(
        std::f64::consts::FRAC_PI_2, std::f64::consts::PI,
        TrainCount::Infinite, Expr::parse("1/(1+t^2)").unwrap(), 2.0, true).unwrap())], true).unwrap()
}
fn mu_ex2() -> MeasureSpec {
    MeasureSpec::new(vec![Component::Density(DensityComponent::new(
        Expr::parse("1/((1+t^2)*t)").unwrap(), Some(1.0), None, None, Some(3.0),
        Some(std::f64::consts::FRAC_PI_4)).unwrap())], false).unwrap()
}
fn mu_ex1() -> MeasureSpec {
    MeasureSpec::new(vec![Component::Density(DensityComponent::new(
        Expr::parse("1/(pi*(1+t^2)^2)").unwrap(), None, None, Some(4.0), Some(4.0), None).unwrap())], true).unwrap()
}
fn mu_ex4() -> MeasureSpec {
    MeasureSpec::new(vec![Component::Density(DensityComponent::new(
        Expr::parse("1/(1+t^2)").unwrap(), None, Some(0.0), Some(2.0), None, None).unwrap())], false).unwrap()
}
fn main() {
    let n = 10_000;
    for (name, beta, mu) in [("ex1", 0.0, mu_ex1()), ("ex2", 1.0, mu_ex2()), ("ex3", 2.0, mu_ex3()), ("ex4", 0.0, mu_ex4())] {
        let f = ParabolicMap::new(beta, mu).unwrap();
        let t0 = Instant::now();
        let tr = orbit(&f, HPoint::i(), n, 1e-8).unwrap();
        let el = t0.elapsed();
        let last = tr.points.last().unwrap();
        println!("{name} beta={beta}: n={n} in {:.2?} ({:.1} us/step)  z_n=({:.3e},{:.3e}) valid={}",
                 el, el.as_secs_f64()*1e6/n as f64, last.x(), last.y(), tr.is_valid());
    }
}
