"""Fixed name lists for synthetic identities. Order matters: it feeds the RNG."""

MALE_GIVEN = (
    "José", "Juan", "Luis", "Carlos", "Andrés", "Jesús", "Jorge", "Óscar", "Héctor",
    "Julián", "Sebastián", "Nicolás", "Martín", "Iván", "Ramón", "Rubén", "Adrián",
    "Fabián", "Germán", "Tomás", "Álvaro", "Simón", "Joaquín", "Hernán", "Darío",
    "Camilo", "Diego", "Felipe", "Mateo", "Santiago", "Miguel", "Pedro", "Pablo",
    "Manuel", "Fernando", "Eduardo", "Ricardo", "Alejandro", "Gabriel", "Daniel",
)

FEMALE_GIVEN = (
    "María", "Ana", "Lucía", "Sofía", "Valentina", "Camila", "Mónica", "Verónica",
    "Ángela", "Inés", "Belén", "Raquel", "Beatriz", "Rocío", "Noemí", "Estefanía",
    "Andrea", "Carolina", "Daniela", "Diana", "Gabriela", "Isabel", "Juliana", "Laura",
    "Liliana", "Luz", "Marcela", "Natalia", "Paola", "Sandra", "Sara", "Yolanda",
    "Paula", "Juana", "Marta", "Gloria", "Patricia", "Elena", "Teresa", "Rosa",
)

SURNAMES = (
    "Pérez", "Gómez", "Rodríguez", "González", "Martínez", "López", "García", "Hernández",
    "Sánchez", "Ramírez", "Díaz", "Muñoz", "Núñez", "Jiménez", "Gutiérrez", "Álvarez",
    "Suárez", "Vásquez", "Castaño", "Peña", "Ibáñez", "Ordóñez", "Zúñiga", "Cárdenas",
    "Ortiz", "Rojas", "Moreno", "Torres", "Vargas", "Castro", "Romero", "Herrera",
    "Medina", "Aguilar", "Mejía", "Quiñónez", "Valencia", "Ospina", "Cortés", "Ríos",
    "Mendoza", "Cristancho", "Arias", "Cañas", "Londoño", "Restrepo", "Escobar", "Salazar",
    "Cifuentes", "Patiño", "Quintero", "Bermúdez", "Chávez", "Bolaños", "Rincón", "Tovar",
)
