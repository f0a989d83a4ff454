use dirac_ni::special::parabolic_cylinder_d;

// (nu, x, D_nu(x)) frozen from a 40-digit reference evaluation
const TABLE: &[(f64, f64, f64)] = &[
    (-30.5, -30.0, 1.5994830417474143e+110),
    (-30.5, -12.0, 1.8387693266168994e+17),
    (-30.5, -6.5, 1.3563197952939338),
    (-30.5, -3.0, 1.1352800670065695e-9),
    (-30.5, -0.7, 3.191575069962202e-15),
    (-30.5, 0.0, 6.8879438935539123e-17),
    (-30.5, 0.5, 4.4463557040767012e-18),
    (-30.5, 3.0, 4.0307007288172892e-24),
    (-30.5, 5.5, 1.5828988855435695e-30),
    (-30.5, 6.5, 3.008428861712416e-33),
    (-30.5, 10.0, 1.0107089503688901e-43),
    (-30.5, 25.0, 1.5355935334167901e-111),
    (-30.5, 40.0, 1.956639217102241e-223),
    (-12.5, -30.0, 9.8817735663302093e+106),
    (-12.5, -12.0, 3.0111684017799747e+20),
    (-12.5, -6.5, 5.1389724516176285e+6),
    (-12.5, -3.0, 2.2111614541968291),
    (-12.5, -0.7, 5.8247421321133993e-4),
    (-12.5, 0.0, 5.1407790697086126e-5),
    (-12.5, 0.5, 9.0629913555894686e-6),
    (-12.5, 3.0, 1.0970520319760638e-9),
    (-12.5, 5.5, 3.8062176703923938e-14),
    (-12.5, 6.5, 3.7521077178452569e-16),
    (-12.5, 10.0, 2.079744885801074e-24),
    (-12.5, 25.0, 4.0726073989985427e-86),
    (-12.5, 40.0, 1.7129809869503741e-194),
    (-4.5, -30.0, 1.6662301089422757e+102),
    (-4.5, -12.0, 5.7305501726503586e+18),
    (-4.5, -6.5, 6.4394887389208504e+6),
    (-4.5, -3.0, 1.4308094047411129e+2),
    (-4.5, -0.7, 9.440860643663862e-1),
    (-4.5, 0.0, 2.316724217633372e-1),
    (-4.5, 0.5, 8.4374365935144981e-2),
    (-4.5, 3.0, 3.0116930653041539e-4),
    (-4.5, 5.5, 1.7098004357241769e-7),
    (-4.5, 6.5, 4.3858170321313789e-9),
    (-4.5, 10.0, 3.906749998746482e-16),
    (-4.5, 25.0, 6.9540738861816244e-75),
    (-4.5, 40.0, 1.1737910507209246e-181),
    (-2.0, -30.0, 3.9126375369258826e+99),
    (-2.0, -12.0, 1.2967985873376121e+17),
    (-2.0, -6.5, 6.2985235269993194e+5),
    (-2.0, -3.0, 7.1355769209620781e+1),
    (-2.0, -0.7, 2.3881215963533109),
    (-2.0, 0.0, 1.0),
    (-2.0, 0.5, 5.2777895372446076e-1),
    (-2.0, 3.0, 9.0884806825297933e-3),
    (-2.0, 5.5, 1.5703406107475354e-5),
    (-2.0, 6.5, 5.7322606079748536e-7),
    (-2.0, 10.0, 1.3490797670815066e-13),
    (-2.0, 25.0, 2.2056374371983745e-71),
    (-2.0, 40.0, 1.1947436416227341e-177),
    (-1.0, -30.0, 1.3042125123086275e+98),
    (-1.0, -12.0, 1.0806654894480101e+16),
    (-1.0, -6.5, 9.6900361949855975e+4),
    (-1.0, -3.0, 2.3750123328352972e+1),
    (-1.0, -0.7, 2.1477367020140392),
    (-1.0, 0.0, 1.2533141373155003),
    (-1.0, 0.5, 8.2326821817803005e-1),
    (-1.0, 3.0, 3.2103581293111515e-2),
    (-1.0, 5.5, 9.1612959281338751e-5),
    (-1.0, 6.5, 3.8915191018240978e-6),
    (-1.0, 10.0, 1.375303588825587e-12),
    (-1.0, 25.0, 5.5316549299416132e-70),
    (-1.0, 40.0, 4.7849371326809574e-176),
    (-0.5, -30.0, 1.3439841863085994e+97),
    (-0.5, -12.0, 1.7647080914360748e+15),
    (-0.5, -6.5, 2.1644723589592575e+4),
    (-0.5, -3.0, 8.2111204276138112),
    (-0.5, -0.7, 1.6305508961407455),
    (-0.5, 0.0, 1.2162802142575203),
    (-0.5, 0.5, 9.2695304958902003e-1),
    (-0.5, 3.0, 5.8756547729294153e-2),
    (-0.5, 5.5, 2.1897680832164353e-4),
    (-0.5, 6.5, 1.0060510610961322e-5),
    (-0.5, 10.0, 4.3756306267890677e-12),
    (-0.5, 25.0, 2.7685823760767369e-69),
    (-0.5, 40.0, 3.027440260967163e-175),
    (0.3, -30.0, -3.6277925928779682e+95),
    (0.3, -12.0, -9.9812215845669486e+13),
    (0.3, -6.5, -2.0413367508229996e+3),
    (0.3, -3.0, -1.6061900907201359),
    (0.3, -0.7, 3.8297184790323508e-1),
    (0.3, 0.0, 7.7240658187262205e-1),
    (0.3, 0.5, 8.7886452702583093e-1),
    (0.3, 3.0, 1.4808547706348243e-1),
    (0.3, 5.5, 8.6937951846647094e-4),
    (0.3, 6.5, 4.5466244380708859e-5),
    (0.3, 10.0, 2.7738861993085736e-11),
    (0.3, 25.0, 3.638664613696058e-68),
    (0.3, 40.0, 5.7923355865256737e-174),
    (1.7, -30.0, 5.3603184818556764e+93),
    (1.7, -12.0, 5.4334955580262777e+12),
    (1.7, -6.5, 2.8108942309677568e+2),
    (1.7, -3.0, 1.3119199827019756),
    (1.7, -0.7, -7.7283338012007917e-1),
    (1.7, 0.0, -8.0748220117408697e-1),
    (1.7, 0.5, -3.1493457254234369e-1),
    (1.7, 3.0, 6.3758061295450811e-1),
    (1.7, 5.5, 9.2398327248042497e-3),
    (1.7, 6.5, 6.1457031582820281e-4),
    (1.7, 10.0, 6.9190853109542547e-10),
    (1.7, 25.0, 3.2928476410345503e-66),
    (1.7, 40.0, 1.0128559891890003e-171),
    (3.5, -30.0, 1.1035929997969972e+92),
    (3.5, -12.0, 6.0936297687679463e+11),
    (3.5, -6.5, 1.1206545093377902e+2),
    (3.5, -3.0, -1.6831037888335775e-1),
    (3.5, -0.7, 1.7720024915061579),
    (3.5, 0.0, 1.5203502678219004),
    (3.5, 0.5, -4.6224365620398252e-1),
    (3.5, 3.0, 2.5822680699554676),
    (3.5, 5.5, 1.7359030757581271e-1),
    (3.5, 6.5, 1.6244604507203479e-2),
    (3.5, 10.0, 4.1999740644874393e-8),
    (3.5, 25.0, 1.0745519082055346e-63),
    (3.5, 40.0, 7.730866920562281e-169),
    (7.2, -30.0, 1.4862019320800463e+89),
    (7.2, -12.0, 2.8682492884485152e+10),
    (7.2, -6.5, 1.018074498522571e+2),
    (7.2, -3.0, 4.7247636887198906e+1),
    (7.2, -0.7, 3.6304897833422123e+1),
    (7.2, 0.0, 1.4402230583768428e+1),
    (7.2, 0.5, -4.103009929704928e+1),
    (7.2, 3.0, -4.9093936599283425e+1),
    (7.2, 5.5, 4.3402038652147148e+1),
    (7.2, 6.5, 9.9219530623277228),
    (7.2, 10.0, 1.736316744616324e-4),
    (7.2, 25.0, 1.5523950524921487e-58),
    (7.2, 40.0, 6.4708162076571171e-163),
    (15.3, -30.0, 9.8488126091489388e+85),
    (15.3, -12.0, 6.6386271909809453e+10),
    (15.3, -6.5, -8.9015657977104824e+5),
    (15.3, -3.0, -3.5418245872338154e+5),
    (15.3, -0.7, -8.4501820705091863e+4),
    (15.3, 0.0, 3.513462549869174e+5),
    (15.3, 0.5, -7.7348421202646951e+5),
    (15.3, 3.0, 7.9222207592074942e+5),
    (15.3, 5.5, -5.5535489812409713e+5),
    (15.3, 6.5, 1.2981268000841409e+5),
    (15.3, 10.0, 7.6107566480157528e+3),
    (15.3, 25.0, 2.8327789163973048e-47),
    (15.3, 40.0, 5.804593763816838e-150),
    (30.5, -30.0, -3.2594134965394066e+84),
    (30.5, -12.0, -8.8915511430437175e+16),
    (30.5, -6.5, 1.5621258005191944e+16),
    (30.5, -3.0, -1.0085571345831676e+14),
    (30.5, -0.7, 4.6306462410589295e+14),
    (30.5, 0.0, -1.0265861512726519e+16),
    (30.5, 0.5, 6.0147159052518365e+15),
    (30.5, 3.0, 1.4793664785871861e+16),
    (30.5, 5.5, 1.5001339047226435e+16),
    (30.5, 6.5, 3.9363224470630062e+15),
    (30.5, 10.0, 1.0708394350344197e+16),
    (30.5, 25.0, 2.82048037434369e-26),
    (30.5, 40.0, 1.0486819855462812e-125),
    (49.5, -30.0, 2.1079185679135889e+87),
    (49.5, -12.0, 3.0116300199692427e+31),
    (49.5, -6.5, -2.0729978871781941e+31),
    (49.5, -3.0, -3.3739168046568339e+30),
    (49.5, -0.7, 1.1506361805518568e+31),
    (49.5, 0.0, -1.5558193930394356e+31),
    (49.5, 0.5, 8.4105871088668777e+30),
    (49.5, 3.0, 2.2000073859877846e+31),
    (49.5, 5.5, -1.2874039448345595e+31),
    (49.5, 6.5, -1.0740027783265887e+31),
    (49.5, 10.0, 1.5982671850570319e+31),
    (49.5, 25.0, 2.7017083204903045),
    (49.5, 40.0, 1.7703634055927411e-95),
];

#[test]
fn matches_high_precision_reference() {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for &(nu, x, want) in TABLE {
        let got = parabolic_cylinder_d(nu, x).unwrap();
        let err = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        worst = worst.max(err);
        if err > 1e-10 {
            bad.push((nu, x, got, want, err));
        }
    }
    assert!(bad.is_empty(), "worst {worst:e}, failures {bad:#?}");
}

#[test]
fn origin_value_matches_integral_representation() {
    // D_nu(0) = Gamma(-nu)^{-1} int_0^inf t^{-nu-1} e^{-t^2/2} dt; for nu = -1/2 substitute
    // t = s^2 to get 2 int_0^inf e^{-s^4/2} ds / Gamma(1/2)
    let f = |s: f64| 2.0 * (-s.powi(4) / 2.0).exp();
    let (a, b, n) = (0.0, 6.0, 20000);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = acc * h / 3.0 / std::f64::consts::PI.sqrt();
    let got = parabolic_cylinder_d(-0.5, 0.0).unwrap();
    assert!(((got - integral) / integral).abs() < 1e-10, "{got} {integral}");
}
