/**
 * Bundled example rubrics for the template picker, matching the server-side
 * templates so a teacher can start from a working rubric and adapt it.
 */

export interface RubricTemplate {
  id: string;
  label: string;
  criteria: number;
  text: string;
}

export const RUBRIC_TEMPLATES: RubricTemplate[] = [
  {
    id: 'forward_roll',
    label: 'Taekwondo forward roll (6 criteria)',
    criteria: 6,
    text: `1. Place both hands on the ground: Start by placing both of your hands on the ground.
2. Curl your body into a round shape: Next, curl your body to form a round shape. This helps in creating momentum for the roll.
3. Initiate the roll: Gently push off with your legs. As you roll, make sure the back of your head, shoulders, back, hips, and finally your feet touch the ground in that order. This sequential contact is crucial for a smooth and safe roll.
4. Maintain correct body curvature: Lastly, be careful not to roll with your body too tightly curled or with your back too straight, as if lying down. Maintaining a proper curvature of the body is essential for a safe and effective forward roll.
5. Avoid improper body alignment: Be cautious not to lean your body to the right or left side while rolling. This can cause an uneven roll and increase the risk of injury.
6. Stand up: After completing the roll, use your feet to stand up. It's important to ensure that it's the back of your head that touches the ground, not the crown. Touching the ground with the crown of your head can lead to injury.
`,
  },
  {
    id: 'class_demonstration',
    label: 'Class demonstration (10 criteria)',
    criteria: 10,
    text: `• Are the learning objectives set reasonably and stated clearly?
• Has motivational activity related to the learning objectives been effectively carried out?
• Are the elements of the learning content presented systematically and effectively?
• Were appropriate teaching methods used that align with the learning objectives and content?
• Were suitable questions and feedback provided that align with the learning objectives and content?
- Were appropriate media and materials used for the learning activities, and was board writing done effectively?
- Are learners actively engaged in the learning activities?
- Was an appropriate evaluation conducted to confirm the achievement of the learning objectives?
- In case of changes in the classroom situation, was the lesson plan adjusted smoothly if needed?
- Were language and non-verbal actions used appropriately for communication with the learners?
`,
  },
  {
    id: 'fire_extinguisher',
    label: 'Fire extinguisher usage drill (6 criteria)',
    criteria: 6,
    text: `1. Approach the fire extinguisher and grasp the neck part, not the handle.
2. Remove the safety pin while holding the extinguisher on the ground.
3. Grab the lower part of the handle and proceed to the fire scene.
4. Stand 2-3 meters away from the fire.
5. Face away from the wind.
6. Hold the nozzle, press the handle, and sweep like using a broom.
`,
  },
  {
    id: 'forklift',
    label: 'Forklift drill (4 criteria)',
    criteria: 4,
    text: `- Upon the start signal, lift the fork and cross the starting line.
- Safely insert the fork into the pallet placed on the drum in the work area, then lift.
- Ensure not to drop the drums or cargo.
- Drive along the course following the forward indicators.
`,
  },
];

export function templateById(id: string): RubricTemplate | undefined {
  return RUBRIC_TEMPLATES.find((t) => t.id === id);
}
