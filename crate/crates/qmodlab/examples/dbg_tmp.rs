use qmodlab::numeric::{Ctx, Rat};
use qmodlab::falsetheta::rank2_modular_check;

fn main() {
    let ctx = Ctx::new(192);
    let tau = ctx.complex(0.1, 0.7);
    for (s, al) in [([[2i64,1],[1,2]], [Rat::from((1,3)), Rat::from((1,5))]),
                    ([[3,-1],[-1,2]], [Rat::from(0), Rat::from((1,2))]),
                    ([[1,0],[0,3]], [Rat::from((2,7)), Rat::from((1,4))])] {
        let t0 = std::time::Instant::now();
        let rep = rank2_modular_check(s, al.clone(), &tau, 1e-9, &ctx).unwrap();
        println!("S={s:?} alpha={al:?}: residual = {:.3e} ({:?})", rep.residual, t0.elapsed());
    }
}
